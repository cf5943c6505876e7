#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psimc/errors.hpp"
#include "psimc/limits.hpp"

namespace psimc::logic {

using Atom = std::string;

// Atom names match [a-zA-Z_][a-zA-Z0-9_]*.
bool valid_atom_name(std::string_view name);

// Ordered set of atom names. Construction sorts and deduplicates, so the
// position of an atom is stable and the lexicographically smallest atom sits
// at index 0 (the leftmost bit of an interpretation).
class Signature {
  public:
    Signature() = default;
    explicit Signature(std::vector<Atom> atoms);

    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const Atom& at(std::size_t i) const { return atoms_.at(i); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return index_of(name).has_value(); }

    bool operator==(const Signature& other) const { return atoms_ == other.atoms_; }

  private:
    std::vector<Atom> atoms_;
};

enum class Connective : std::uint8_t { Atom, Not, And, Or, Implies };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Immutable syntax tree. Implication is kept in the tree as written; only
// evaluation rewrites (a -> b) as (!a | b).
class Formula {
  public:
    static FormulaPtr atom(Atom name);
    static FormulaPtr negation(FormulaPtr inner);
    static FormulaPtr conjunction(FormulaPtr lhs, FormulaPtr rhs);
    static FormulaPtr disjunction(FormulaPtr lhs, FormulaPtr rhs);
    static FormulaPtr implication(FormulaPtr lhs, FormulaPtr rhs);

    Connective kind() const { return kind_; }
    const Atom& atom_name() const { return atom_; }
    const FormulaPtr& lhs() const { return lhs_; }
    const FormulaPtr& rhs() const { return rhs_; }

  private:
    Formula(Connective kind, Atom atom, FormulaPtr lhs, FormulaPtr rhs)
        : kind_(kind), atom_(std::move(atom)), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

    Connective kind_;
    Atom atom_;
    FormulaPtr lhs_;
    FormulaPtr rhs_;
};

bool structurally_equal(const Formula& a, const Formula& b);

// Minimal-parentheses rendering; parse(to_string(f)) reproduces f exactly.
std::string to_string(const Formula& f);

// Set of formulas. Duplicates (structural) collapse; iteration order is the
// canonical text order, so two KBs with equal content compare equal.
class KnowledgeBase {
  public:
    KnowledgeBase() = default;
    explicit KnowledgeBase(const std::vector<FormulaPtr>& formulas);

    void insert(const FormulaPtr& f);
    const std::vector<FormulaPtr>& formulas() const { return formulas_; }
    std::size_t size() const { return formulas_.size(); }
    bool empty() const { return formulas_.empty(); }

    bool operator==(const KnowledgeBase& other) const;

  private:
    std::vector<FormulaPtr> formulas_;  // sorted by canonical text
    std::vector<std::string> keys_;     // canonical text, same order
};

KnowledgeBase kb_union(const KnowledgeBase& a, const KnowledgeBase& b);

// Grammar: implies := or ('->' implies)?   (right associative)
//          or      := and ('|' and)*
//          and     := unary ('&' unary)*
//          unary   := '!' unary | '(' implies ')' | atom
FormulaPtr parse_formula(std::string_view src);

// One formula per line, '#' starts a comment, blank lines skipped.
KnowledgeBase parse_kb(std::string_view src);

Signature atoms_of(const Formula& f);
Signature atoms_of(const KnowledgeBase& kb);

// Two-valued interpretation over a signature: bits[i] assigns sig.at(i), so
// bits read left to right follow the sorted atom order. Row `index` of the
// standard truth table (ascending binary, first atom most significant) is
// Interpretation::from_index(index, n).
struct Interpretation {
    std::vector<std::uint8_t> bits;

    Interpretation() = default;
    explicit Interpretation(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

    static Interpretation from_index(std::uint64_t index, std::size_t width);
    std::uint64_t to_index() const;
    std::string to_string() const;
    std::size_t size() const { return bits.size(); }

    bool operator==(const Interpretation& other) const { return bits == other.bits; }
};

// Truth order: False < Both < True; conjunction is min, disjunction is max.
enum class TriValue : std::uint8_t { False = 0, Both = 1, True = 2 };

TriValue tri_not(TriValue v);
TriValue tri_and(TriValue a, TriValue b);
TriValue tri_or(TriValue a, TriValue b);
char tri_char(TriValue v);

// values[i] assigns sig.at(i).
struct ThreeValuedInterpretation {
    std::vector<TriValue> values;

    std::size_t both_count() const;
    std::string to_string() const;

    bool operator==(const ThreeValuedInterpretation& other) const {
        return values == other.values;
    }
};

// Satisfaction sequence entries, and generally any 0/1 vector.
using BitSequence = std::vector<std::uint8_t>;

std::string bits_to_string(const BitSequence& bits);

// Classical evaluation. Throws SignatureError if the formula mentions an atom
// outside `sig` or if `w` does not have exactly sig.size() bits.
bool eval2(const Formula& f, const Interpretation& w, const Signature& sig);

// Three-valued evaluation (Priest); same signature checks as eval2.
TriValue eval3(const Formula& f, const ThreeValuedInterpretation& v, const Signature& sig);

// v satisfies f when eval3 is True or Both.
bool sat3(const Formula& f, const ThreeValuedInterpretation& v, const Signature& sig);
bool sat3(const KnowledgeBase& kb, const ThreeValuedInterpretation& v, const Signature& sig);

// All classical models of kb over sig, ascending binary order. The empty KB
// is satisfied by every interpretation. Throws CapError past max_atoms.
std::vector<Interpretation> models(const KnowledgeBase& kb, const Signature& sig,
                                   std::size_t max_atoms = limits::kDefaultMaxAtoms);

// Bit i tells whether truth-table row i satisfies every formula of kb.
BitSequence satisfaction_sequence(const KnowledgeBase& kb, const Signature& sig,
                                  std::size_t max_atoms = limits::kDefaultMaxAtoms);

// Closed-world reading: atom is 1 iff every model of kb assigns it 1.
// Throws InputError when kb has no models.
Interpretation cwa_interpretation(const KnowledgeBase& kb, const Signature& sig,
                                  std::size_t max_atoms = limits::kDefaultMaxAtoms);

}  // namespace psimc::logic
