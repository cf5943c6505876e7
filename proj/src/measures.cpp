#include "psimc/measures.hpp"

#include <algorithm>

namespace psimc::measures {

using logic::Interpretation;
using logic::KnowledgeBase;
using logic::Signature;
using logic::ThreeValuedInterpretation;
using logic::TriValue;

int drastic(const KnowledgeBase& kb, const Signature& sig, std::size_t max_atoms) {
    return logic::models(kb, sig, max_atoms).empty() ? 1 : 0;
}

int contension(const KnowledgeBase& kb, const Signature& sig, std::size_t max_atoms) {
    if (sig.size() > max_atoms)
        throw CapError("signature has " + std::to_string(sig.size()) +
                       " atoms, contension cap is " + std::to_string(max_atoms));
    std::size_t n = sig.size();
    ThreeValuedInterpretation v;
    v.values.assign(n, TriValue::False);
    std::size_t best = n + 1;
    // Odometer over {False, Both, True}^n.
    while (true) {
        if (v.both_count() < best && logic::sat3(kb, v, sig)) best = v.both_count();
        std::size_t j = 0;
        for (; j < n; ++j) {
            if (v.values[j] != TriValue::True) {
                v.values[j] = static_cast<TriValue>(static_cast<int>(v.values[j]) + 1);
                break;
            }
            v.values[j] = TriValue::False;
        }
        if (j == n) break;
    }
    return static_cast<int>(best);
}

int hamming(const Interpretation& a, const Interpretation& b) {
    if (a.bits.size() != b.bits.size())
        throw SignatureError("hamming distance over different widths");
    int d = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i] != b.bits[i]) ++d;
    return d;
}

ThreeValuedInterpretation combine3(const Interpretation& a, const Interpretation& b) {
    if (a.bits.size() != b.bits.size())
        throw SignatureError("combining interpretations of different widths");
    ThreeValuedInterpretation v;
    v.values.resize(a.bits.size());
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        if (a.bits[i] != b.bits[i])
            v.values[i] = TriValue::Both;
        else
            v.values[i] = a.bits[i] ? TriValue::True : TriValue::False;
    }
    return v;
}

int min_mismatch_oracle(const std::vector<Interpretation>& ma,
                        const std::vector<Interpretation>& mb) {
    if (ma.empty() || mb.empty())
        throw InputError("min mismatch over an empty model list");
    int best = hamming(ma.front(), mb.front());
    for (const auto& a : ma)
        for (const auto& b : mb)
            best = std::min(best, hamming(a, b));
    return best;
}

}  // namespace psimc::measures
