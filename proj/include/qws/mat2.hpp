#pragma once

#include <cmath>

#include "qws/lattice.hpp"

namespace qws {

/// Dense complex 2×2 matrix, row-major entries.
struct Mat2 {
  cplx a{}, b{};  // row 0
  cplx c{}, d{};  // row 1

  static Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 zero() { return {}; }

  /// Rank-one product u vᵀ (no conjugation).
  static Mat2 outer(const Spinor& u, const Spinor& v) {
    return {u.up * v.up, u.up * v.down, u.down * v.up, u.down * v.down};
  }

  cplx det() const { return a * d - b * c; }
  cplx trace() const { return a + d; }

  Mat2 transpose() const { return {a, c, b, d}; }
  Mat2 conj() const { return {std::conj(a), std::conj(b), std::conj(c), std::conj(d)}; }
  Mat2 adjoint() const { return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)}; }

  Mat2 inverse() const {
    const cplx dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
  }

  double frobenius_norm() const {
    return std::sqrt(std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d));
  }

  /// Spectral norm from the closed-form singular values of a 2×2 matrix.
  double op_norm() const {
    const double f = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    const double dd = std::abs(det());
    const double disc = std::max(0.0, f * f - 4.0 * dd * dd);
    return std::sqrt(0.5 * (f + std::sqrt(disc)));
  }

  Mat2& operator+=(const Mat2& o) {
    a += o.a; b += o.b; c += o.c; d += o.d;
    return *this;
  }
  Mat2& operator-=(const Mat2& o) {
    a -= o.a; b -= o.b; c -= o.c; d -= o.d;
    return *this;
  }
  friend Mat2 operator+(Mat2 x, const Mat2& y) { return x += y; }
  friend Mat2 operator-(Mat2 x, const Mat2& y) { return x -= y; }
  friend Mat2 operator*(const cplx& s, const Mat2& m) { return {s * m.a, s * m.b, s * m.c, s * m.d}; }
  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
  friend Spinor operator*(const Mat2& m, const Spinor& v) {
    return {m.a * v.up + m.b * v.down, m.c * v.up + m.d * v.down};
  }
};

inline Mat2 matrix_power(Mat2 m, long n) {
  if (n < 0) return matrix_power(m.inverse(), -n);
  Mat2 r = Mat2::identity();
  while (n > 0) {
    if (n & 1) r = r * m;
    m = m * m;
    n >>= 1;
  }
  return r;
}

inline const Mat2 sigma0 = Mat2::identity();
inline const Mat2 sigma1{0, 1, 1, 0};
inline const Mat2 sigma2{0, -iu, iu, 0};
inline const Mat2 sigma3{1, 0, 0, -1};

}  // namespace qws
