#pragma once

// Radix-2 complex FFT plus the axis transforms realizing the convention
//   ftilde(k) = integral f(x) e^{+i k0 t} e^{-i k.x_spatial} d^d x
// on the symmetric grids of grid.hpp. Per-axis phase bookkeeping reduces to
// (-1)^n pre/post modulation because dk*L = pi exactly.

#include <numbers>

#include "modlab/grid.hpp"
#include "modlab/parallel.hpp"

namespace modlab {

// In-place iterative radix-2 FFT on strided data. sign=-1: e^{-2pi i jn/N}.
inline void fft_pow2(Complex* data, std::size_t n, std::size_t stride, int sign) {
  if (n < 2) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    Complex wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        Complex u = data[(i + k) * stride];
        Complex v = data[(i + k + len / 2) * stride] * w;
        data[(i + k) * stride] = u + v;
        data[(i + k + len / 2) * stride] = u - v;
        w *= wl;
      }
    }
  }
}

namespace detail {

// Applies one axis of the Fourier convention. time_sign is +1 for axis 0.
// position->momentum:  F_j = delta * (-1)^{j-N/2} FFT_sign[(-1)^n f_n]
// momentum->position:  f_n = (-1)^n/(N*delta) FFT_{-sign}[(-1)^{j-N/2} F_j]
inline void axis_fourier(std::vector<Complex>& data, const GridSpec& spec, int axis,
                         bool to_momentum) {
  const int d = spec.dim();
  const std::size_t n = static_cast<std::size_t>(spec.points(axis));
  std::size_t stride = 1;
  for (int a = d - 1; a > axis; --a) stride *= static_cast<std::size_t>(spec.points(a));
  const std::size_t total = data.size();
  const std::size_t lines = total / n;
  const int time_sign = (axis == 0) ? +1 : -1;
  const int fft_sign = to_momentum ? time_sign : -time_sign;
  const double scale = to_momentum ? spec.spacing(axis) : 1.0 / (static_cast<double>(n) * spec.spacing(axis));
  const std::size_t half = n / 2;

  parallel_for(lines, [&](std::size_t line) {
    // Recover the base offset of this line: lines enumerate all indices with
    // the `axis` coordinate removed.
    std::size_t inner = line % stride;
    std::size_t outer = line / stride;
    Complex* p = data.data() + outer * stride * n + inner;
    auto sample_sign = [&](std::size_t i) { return ((i & 1u) != 0) ? -1.0 : 1.0; };
    auto mode_sign = [&](std::size_t j) { return (((j + half) & 1u) != 0) ? -1.0 : 1.0; };
    if (to_momentum) {
      for (std::size_t i = 0; i < n; ++i) p[i * stride] *= sample_sign(i);
      fft_pow2(p, n, stride, fft_sign);
      for (std::size_t j = 0; j < n; ++j) p[j * stride] *= mode_sign(j) * scale;
    } else {
      for (std::size_t j = 0; j < n; ++j) p[j * stride] *= mode_sign(j);
      fft_pow2(p, n, stride, fft_sign);
      for (std::size_t i = 0; i < n; ++i) p[i * stride] *= sample_sign(i) * scale;
    }
  });
}

}  // namespace detail

}  // namespace modlab
