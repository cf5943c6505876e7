#pragma once

#include <cstddef>

namespace psimc::limits {

// Interpretation enumeration walks 2^n rows.
inline constexpr std::size_t kDefaultMaxAtoms = 20;

// Contension enumerates 3^n three-valued interpretations, so its cap is lower.
inline constexpr std::size_t kDefaultContensionAtoms = 12;

// Hard ceiling on a single wire frame.
inline constexpr std::size_t kMaxFrameBytes = 64ull * 1024 * 1024;

}  // namespace psimc::limits
