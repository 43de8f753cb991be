#pragma once

#include <cstddef>
#include <span>

namespace lvsk {

/// In-place unnormalized Walsh-Hadamard transform; applying it twice scales by
/// the length. The length must be a power of two.
void fwht(std::span<double> values);

/// Entry (row, col) of the unnormalized Sylvester-Hadamard matrix: +1 or -1.
inline int hadamard_entry(std::size_t row, std::size_t col) noexcept {
  return (__builtin_popcountll(static_cast<unsigned long long>(row & col)) & 1) ? -1 : 1;
}

}  // namespace lvsk
