#pragma once

#include <vector>

#include "psimc/limits.hpp"
#include "psimc/logic.hpp"

namespace psimc::measures {

// 0 if kb has a classical model over sig, otherwise 1.
int drastic(const logic::KnowledgeBase& kb, const logic::Signature& sig,
            std::size_t max_atoms = limits::kDefaultMaxAtoms);

// Minimum number of atoms assigned Both over all three-valued models of kb.
// Enumerates 3^|sig| assignments, so the cap is stricter than the classical
// one. Always defined: the all-Both assignment satisfies any formula.
int contension(const logic::KnowledgeBase& kb, const logic::Signature& sig,
               std::size_t max_atoms = limits::kDefaultContensionAtoms);

// Number of positions where the interpretations disagree.
int hamming(const logic::Interpretation& a, const logic::Interpretation& b);

// Per-atom merge of two classical interpretations: the shared value where
// they agree, Both where they differ.
logic::ThreeValuedInterpretation combine3(const logic::Interpretation& a,
                                          const logic::Interpretation& b);

// Minimum pairwise Hamming distance between two non-empty model lists.
// Duplicates are allowed and do not affect the result.
int min_mismatch_oracle(const std::vector<logic::Interpretation>& ma,
                        const std::vector<logic::Interpretation>& mb);

}  // namespace psimc::measures
