#pragma once

#include <bit>
#include <numbers>
#include <vector>

#include "qws/lattice.hpp"

namespace qws {

/// In-place iterative radix-2 FFT, sign = -1 for the forward transform
/// X_k = Σ_j x_j e^{-2πi jk/N}. Grid length must be a power of two.
inline void fft_radix2(std::vector<cplx>& x, int sign) {
  const std::size_t n = x.size();
  if (n == 0 || !std::has_single_bit(n))
    throw ConfigError("fft: grid length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const cplx wl = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cplx w = 1.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx u = x[i + k];
        const cplx v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

/// Fourier coefficients û(n) = (1/2π)∫ u(ξ) e^{-inξ} dξ of a function sampled
/// on the uniform grid ξ_j = 2πj/N. Coefficient index n runs over
/// [-N/2, N/2); entry k of the result holds n = k - N/2.
inline std::vector<cplx> fourier_coefficients(std::vector<cplx> samples) {
  const std::size_t n = samples.size();
  fft_radix2(samples, -1);
  std::vector<cplx> out(n);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  for (std::size_t k = 0; k < n; ++k) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(k) - half;  // target index n
    const std::size_t bin = static_cast<std::size_t>((m + static_cast<std::ptrdiff_t>(n)) % static_cast<std::ptrdiff_t>(n));
    out[k] = samples[bin] / static_cast<double>(n);
  }
  return out;
}

/// Wiener-algebra norm Σ_n ⟨n⟩^order |û(n)| of a periodic sampled function.
/// order 0 gives the plain algebra norm, order 1 its first-order refinement.
inline double wiener_norm(const std::vector<cplx>& samples, int order = 0) {
  if (order != 0 && order != 1) throw ConfigError("wiener_norm: order must be 0 or 1");
  const auto coef = fourier_coefficients(samples);
  const auto half = static_cast<std::ptrdiff_t>(coef.size() / 2);
  double s = 0;
  for (std::size_t k = 0; k < coef.size(); ++k) {
    const auto m = static_cast<std::int64_t>(static_cast<std::ptrdiff_t>(k) - half);
    s += (order == 0 ? 1.0 : bracket(m)) * std::abs(coef[k]);
  }
  return s;
}

/// Wiener norm of a ℂ²-valued periodic function: Σ_n ⟨n⟩^order ‖coef(n)‖.
inline double wiener_norm(const std::vector<Spinor>& samples, int order = 0) {
  if (order != 0 && order != 1) throw ConfigError("wiener_norm: order must be 0 or 1");
  std::vector<cplx> up(samples.size()), dn(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    up[i] = samples[i].up;
    dn[i] = samples[i].down;
  }
  const auto cu = fourier_coefficients(std::move(up));
  const auto cd = fourier_coefficients(std::move(dn));
  const auto half = static_cast<std::ptrdiff_t>(cu.size() / 2);
  double s = 0;
  for (std::size_t k = 0; k < cu.size(); ++k) {
    const auto m = static_cast<std::int64_t>(static_cast<std::ptrdiff_t>(k) - half);
    s += (order == 0 ? 1.0 : bracket(m)) * std::sqrt(std::norm(cu[k]) + std::norm(cd[k]));
  }
  return s;
}

}  // namespace qws
