#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace nlch::detail {

// Iterative radix-2 FFT, in place. Size must be a power of two.
// inverse = true applies the conjugate transform and the 1/N scale.
void fft(std::vector<std::complex<double>>& a, bool inverse);

std::size_t next_pow2(std::size_t n);

} // namespace nlch::detail
