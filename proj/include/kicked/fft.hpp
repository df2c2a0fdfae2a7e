#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace kicked::detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 FFT. `a.size()` must be a power of two.
/// Twiddles are computed per butterfly from std::polar, keeping rounding
/// near machine precision without a plan or trig recurrences.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n < 2) return;

  for (std::size_t i = 1, rev = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; rev & bit; bit >>= 1) rev ^= bit;
    rev ^= bit;
    if (i < rev) std::swap(a[i], a[rev]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * 3.14159265358979323846 /
                       static_cast<double>(len);
    for (std::size_t block = 0; block < n; block += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w =
            std::polar(1.0, ang * static_cast<double>(k));
        const std::complex<double> u = a[block + k];
        const std::complex<double> v = a[block + k + len / 2] * w;
        a[block + k] = u + v;
        a[block + k + len / 2] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= scale;
  }
}

}  // namespace kicked::detail
