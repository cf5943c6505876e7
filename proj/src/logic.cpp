#include "psimc/logic.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace psimc::logic {

bool valid_atom_name(std::string_view name) {
    if (name.empty()) return false;
    auto head = static_cast<unsigned char>(name[0]);
    if (!std::isalpha(head) && name[0] != '_') return false;
    for (char c : name.substr(1)) {
        auto u = static_cast<unsigned char>(c);
        if (!std::isalnum(u) && c != '_') return false;
    }
    return true;
}

Signature::Signature(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
        if (!valid_atom_name(a)) throw SignatureError("invalid atom name: '" + a + "'");
    }
    std::sort(atoms_.begin(), atoms_.end());
    atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
}

std::optional<std::size_t> Signature::index_of(std::string_view name) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), name);
    if (it == atoms_.end() || *it != name) return std::nullopt;
    return static_cast<std::size_t>(it - atoms_.begin());
}

FormulaPtr Formula::atom(Atom name) {
    if (!valid_atom_name(name)) throw ParseError("invalid atom name: '" + name + "'", 0);
    return FormulaPtr(new Formula(Connective::Atom, std::move(name), nullptr, nullptr));
}

FormulaPtr Formula::negation(FormulaPtr inner) {
    return FormulaPtr(new Formula(Connective::Not, {}, std::move(inner), nullptr));
}

FormulaPtr Formula::conjunction(FormulaPtr lhs, FormulaPtr rhs) {
    return FormulaPtr(new Formula(Connective::And, {}, std::move(lhs), std::move(rhs)));
}

FormulaPtr Formula::disjunction(FormulaPtr lhs, FormulaPtr rhs) {
    return FormulaPtr(new Formula(Connective::Or, {}, std::move(lhs), std::move(rhs)));
}

FormulaPtr Formula::implication(FormulaPtr lhs, FormulaPtr rhs) {
    return FormulaPtr(new Formula(Connective::Implies, {}, std::move(lhs), std::move(rhs)));
}

bool structurally_equal(const Formula& a, const Formula& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case Connective::Atom:
            return a.atom_name() == b.atom_name();
        case Connective::Not:
            return structurally_equal(*a.lhs(), *b.lhs());
        default:
            return structurally_equal(*a.lhs(), *b.lhs()) &&
                   structurally_equal(*a.rhs(), *b.rhs());
    }
}

namespace {

int precedence(Connective k) {
    switch (k) {
        case Connective::Atom: return 4;
        case Connective::Not: return 3;
        case Connective::And: return 2;
        case Connective::Or: return 1;
        case Connective::Implies: return 0;
    }
    return -1;
}

void print_into(const Formula& f, std::string& out) {
    auto child = [&](const Formula& c, bool needs_parens) {
        if (needs_parens) {
            out += '(';
            print_into(c, out);
            out += ')';
        } else {
            print_into(c, out);
        }
    };
    switch (f.kind()) {
        case Connective::Atom:
            out += f.atom_name();
            break;
        case Connective::Not:
            out += '!';
            child(*f.lhs(), precedence(f.lhs()->kind()) < precedence(Connective::Not));
            break;
        case Connective::And:
            // Left associative: only a right-nested '&' needs parentheses.
            child(*f.lhs(), precedence(f.lhs()->kind()) < precedence(Connective::And));
            out += " & ";
            child(*f.rhs(), precedence(f.rhs()->kind()) <= precedence(Connective::And));
            break;
        case Connective::Or:
            child(*f.lhs(), precedence(f.lhs()->kind()) < precedence(Connective::Or));
            out += " | ";
            child(*f.rhs(), precedence(f.rhs()->kind()) <= precedence(Connective::Or));
            break;
        case Connective::Implies:
            // Right associative: only a left-nested '->' needs parentheses.
            child(*f.lhs(), precedence(f.lhs()->kind()) <= precedence(Connective::Implies));
            out += " -> ";
            child(*f.rhs(), precedence(f.rhs()->kind()) < precedence(Connective::Implies));
            break;
    }
}

}  // namespace

std::string to_string(const Formula& f) {
    std::string out;
    print_into(f, out);
    return out;
}

KnowledgeBase::KnowledgeBase(const std::vector<FormulaPtr>& formulas) {
    for (const auto& f : formulas) insert(f);
}

void KnowledgeBase::insert(const FormulaPtr& f) {
    if (!f) throw Error("null formula");
    std::string key = to_string(*f);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it != keys_.end() && *it == key) return;
    auto pos = static_cast<std::size_t>(it - keys_.begin());
    keys_.insert(it, std::move(key));
    formulas_.insert(formulas_.begin() + static_cast<std::ptrdiff_t>(pos), f);
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
    return keys_ == other.keys_;
}

KnowledgeBase kb_union(const KnowledgeBase& a, const KnowledgeBase& b) {
    KnowledgeBase out = a;
    for (const auto& f : b.formulas()) out.insert(f);
    return out;
}

namespace {

struct Token {
    enum Kind { Atom, Not, And, Or, Implies, LParen, RParen, End } kind;
    std::string text;
    std::size_t offset;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
        std::size_t start = pos_;
        if (pos_ >= src_.size()) return {Token::End, "", start};
        char c = src_[pos_];
        if (c == '!') { ++pos_; return {Token::Not, "!", start}; }
        if (c == '&') { ++pos_; return {Token::And, "&", start}; }
        if (c == '|') { ++pos_; return {Token::Or, "|", start}; }
        if (c == '(') { ++pos_; return {Token::LParen, "(", start}; }
        if (c == ')') { ++pos_; return {Token::RParen, ")", start}; }
        if (c == '-') {
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
                pos_ += 2;
                return {Token::Implies, "->", start};
            }
            throw ParseError("expected '->'", start);
        }
        auto u = static_cast<unsigned char>(c);
        if (std::isalpha(u) || c == '_') {
            while (pos_ < src_.size()) {
                auto uc = static_cast<unsigned char>(src_[pos_]);
                if (!std::isalnum(uc) && src_[pos_] != '_') break;
                ++pos_;
            }
            return {Token::Atom, std::string(src_.substr(start, pos_ - start)), start};
        }
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }

  private:
    std::string_view src_;
    std::size_t pos_ = 0;
};

class Parser {
  public:
    explicit Parser(std::string_view src) : lexer_(src) { advance(); }

    FormulaPtr parse() {
        FormulaPtr f = parse_implies();
        if (current_.kind != Token::End)
            throw ParseError("unexpected '" + current_.text + "'", current_.offset);
        return f;
    }

  private:
    void advance() { current_ = lexer_.next(); }

    FormulaPtr parse_implies() {
        FormulaPtr lhs = parse_or();
        if (current_.kind == Token::Implies) {
            advance();
            return Formula::implication(std::move(lhs), parse_implies());
        }
        return lhs;
    }

    FormulaPtr parse_or() {
        FormulaPtr f = parse_and();
        while (current_.kind == Token::Or) {
            advance();
            f = Formula::disjunction(std::move(f), parse_and());
        }
        return f;
    }

    FormulaPtr parse_and() {
        FormulaPtr f = parse_unary();
        while (current_.kind == Token::And) {
            advance();
            f = Formula::conjunction(std::move(f), parse_unary());
        }
        return f;
    }

    FormulaPtr parse_unary() {
        switch (current_.kind) {
            case Token::Not: {
                advance();
                return Formula::negation(parse_unary());
            }
            case Token::LParen: {
                advance();
                FormulaPtr f = parse_implies();
                if (current_.kind != Token::RParen)
                    throw ParseError("expected ')'", current_.offset);
                advance();
                return f;
            }
            case Token::Atom: {
                FormulaPtr f = Formula::atom(current_.text);
                advance();
                return f;
            }
            default:
                throw ParseError("expected a formula", current_.offset);
        }
    }

    Lexer lexer_;
    Token current_{Token::End, "", 0};
};

}  // namespace

FormulaPtr parse_formula(std::string_view src) {
    return Parser(src).parse();
}

KnowledgeBase parse_kb(std::string_view src) {
    KnowledgeBase kb;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= src.size()) {
        std::size_t eol = src.find('\n', pos);
        std::string_view line =
            src.substr(pos, eol == std::string_view::npos ? src.size() - pos : eol - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        std::size_t content = line.find_first_not_of(" \t");
        if (content != std::string_view::npos) {
            try {
                kb.insert(parse_formula(line));
            } catch (const ParseError& e) {
                throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                                 e.offset, line_no);
            }
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return kb;
}

namespace {

void collect_atoms(const Formula& f, std::set<Atom>& out) {
    switch (f.kind()) {
        case Connective::Atom:
            out.insert(f.atom_name());
            break;
        case Connective::Not:
            collect_atoms(*f.lhs(), out);
            break;
        default:
            collect_atoms(*f.lhs(), out);
            collect_atoms(*f.rhs(), out);
    }
}

}  // namespace

Signature atoms_of(const Formula& f) {
    std::set<Atom> names;
    collect_atoms(f, names);
    return Signature(std::vector<Atom>(names.begin(), names.end()));
}

Signature atoms_of(const KnowledgeBase& kb) {
    std::set<Atom> names;
    for (const auto& f : kb.formulas()) collect_atoms(*f, names);
    return Signature(std::vector<Atom>(names.begin(), names.end()));
}

Interpretation Interpretation::from_index(std::uint64_t index, std::size_t width) {
    Interpretation w;
    w.bits.resize(width);
    for (std::size_t j = 0; j < width; ++j)
        w.bits[j] = static_cast<std::uint8_t>((index >> (width - 1 - j)) & 1u);
    return w;
}

std::uint64_t Interpretation::to_index() const {
    std::uint64_t idx = 0;
    for (std::uint8_t b : bits) idx = (idx << 1) | (b & 1u);
    return idx;
}

std::string Interpretation::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (std::uint8_t b : bits) s += b ? '1' : '0';
    return s;
}

TriValue tri_not(TriValue v) {
    switch (v) {
        case TriValue::False: return TriValue::True;
        case TriValue::Both: return TriValue::Both;
        case TriValue::True: return TriValue::False;
    }
    return TriValue::Both;
}

TriValue tri_and(TriValue a, TriValue b) {
    return static_cast<int>(a) < static_cast<int>(b) ? a : b;
}

TriValue tri_or(TriValue a, TriValue b) {
    return static_cast<int>(a) > static_cast<int>(b) ? a : b;
}

char tri_char(TriValue v) {
    switch (v) {
        case TriValue::False: return '0';
        case TriValue::Both: return 'b';
        case TriValue::True: return '1';
    }
    return '?';
}

std::size_t ThreeValuedInterpretation::both_count() const {
    std::size_t n = 0;
    for (TriValue v : values)
        if (v == TriValue::Both) ++n;
    return n;
}

std::string ThreeValuedInterpretation::to_string() const {
    std::string s;
    s.reserve(values.size());
    for (TriValue v : values) s += tri_char(v);
    return s;
}

std::string bits_to_string(const BitSequence& bits) {
    std::string s;
    s.reserve(bits.size());
    for (std::uint8_t b : bits) s += b ? '1' : '0';
    return s;
}

namespace {

std::size_t atom_index(const Formula& f, const Signature& sig) {
    auto idx = sig.index_of(f.atom_name());
    if (!idx) throw SignatureError("atom '" + f.atom_name() + "' not in signature");
    return *idx;
}

}  // namespace

bool eval2(const Formula& f, const Interpretation& w, const Signature& sig) {
    if (w.bits.size() != sig.size())
        throw SignatureError("interpretation width " + std::to_string(w.bits.size()) +
                             " does not match signature size " + std::to_string(sig.size()));
    switch (f.kind()) {
        case Connective::Atom:
            return w.bits[atom_index(f, sig)] != 0;
        case Connective::Not:
            return !eval2(*f.lhs(), w, sig);
        case Connective::And:
            return eval2(*f.lhs(), w, sig) && eval2(*f.rhs(), w, sig);
        case Connective::Or:
            return eval2(*f.lhs(), w, sig) || eval2(*f.rhs(), w, sig);
        case Connective::Implies:
            return !eval2(*f.lhs(), w, sig) || eval2(*f.rhs(), w, sig);
    }
    throw Error("unreachable");
}

TriValue eval3(const Formula& f, const ThreeValuedInterpretation& v, const Signature& sig) {
    if (v.values.size() != sig.size())
        throw SignatureError("interpretation width " + std::to_string(v.values.size()) +
                             " does not match signature size " + std::to_string(sig.size()));
    switch (f.kind()) {
        case Connective::Atom:
            return v.values[atom_index(f, sig)];
        case Connective::Not:
            return tri_not(eval3(*f.lhs(), v, sig));
        case Connective::And:
            return tri_and(eval3(*f.lhs(), v, sig), eval3(*f.rhs(), v, sig));
        case Connective::Or:
            return tri_or(eval3(*f.lhs(), v, sig), eval3(*f.rhs(), v, sig));
        case Connective::Implies:
            return tri_or(tri_not(eval3(*f.lhs(), v, sig)), eval3(*f.rhs(), v, sig));
    }
    throw Error("unreachable");
}

bool sat3(const Formula& f, const ThreeValuedInterpretation& v, const Signature& sig) {
    return eval3(f, v, sig) != TriValue::False;
}

bool sat3(const KnowledgeBase& kb, const ThreeValuedInterpretation& v, const Signature& sig) {
    for (const auto& f : kb.formulas())
        if (!sat3(*f, v, sig)) return false;
    return true;
}

namespace {

void check_signature_covers(const KnowledgeBase& kb, const Signature& sig) {
    for (const auto& f : kb.formulas()) {
        std::set<Atom> names;
        collect_atoms(*f, names);
        for (const auto& a : names)
            if (!sig.contains(a))
                throw SignatureError("atom '" + a + "' not in signature");
    }
}

void check_cap(const Signature& sig, std::size_t max_atoms) {
    if (sig.size() > max_atoms)
        throw CapError("signature has " + std::to_string(sig.size()) +
                       " atoms, cap is " + std::to_string(max_atoms));
}

}  // namespace

std::vector<Interpretation> models(const KnowledgeBase& kb, const Signature& sig,
                                   std::size_t max_atoms) {
    check_cap(sig, max_atoms);
    check_signature_covers(kb, sig);
    std::vector<Interpretation> out;
    std::uint64_t rows = 1ull << sig.size();
    for (std::uint64_t i = 0; i < rows; ++i) {
        Interpretation w = Interpretation::from_index(i, sig.size());
        bool ok = true;
        for (const auto& f : kb.formulas()) {
            if (!eval2(*f, w, sig)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(std::move(w));
    }
    return out;
}

BitSequence satisfaction_sequence(const KnowledgeBase& kb, const Signature& sig,
                                  std::size_t max_atoms) {
    check_cap(sig, max_atoms);
    check_signature_covers(kb, sig);
    std::uint64_t rows = 1ull << sig.size();
    BitSequence seq(rows, 1);
    for (std::uint64_t i = 0; i < rows; ++i) {
        Interpretation w = Interpretation::from_index(i, sig.size());
        for (const auto& f : kb.formulas()) {
            if (!eval2(*f, w, sig)) {
                seq[i] = 0;
                break;
            }
        }
    }
    return seq;
}

Interpretation cwa_interpretation(const KnowledgeBase& kb, const Signature& sig,
                                  std::size_t max_atoms) {
    std::vector<Interpretation> mods = models(kb, sig, max_atoms);
    if (mods.empty())
        throw InputError("knowledge base is inconsistent, closed-world reading undefined");
    Interpretation w;
    w.bits.assign(sig.size(), 1);
    for (const auto& m : mods)
        for (std::size_t j = 0; j < sig.size(); ++j)
            if (!m.bits[j]) w.bits[j] = 0;
    return w;
}

}  // namespace psimc::logic
