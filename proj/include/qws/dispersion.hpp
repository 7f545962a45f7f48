#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "qws/coin.hpp"
#include "qws/mat2.hpp"

namespace qws {

/// Spectral branch: Minus parameterizes the upper arc of the spectrum
/// (λ(ξ) = +arccos(ρ₀ cos ξ) on the real axis), Plus the mirrored lower arc.
enum class Branch { Minus, Plus };

/// The ± of the plane-wave family: eigenvalue e^{+iξ} resp. e^{-iξ} of the
/// free transfer matrix, and the matching Jost solutions m_±.
enum class Side { Plus, Minus };

inline Branch other(Branch b) { return b == Branch::Minus ? Branch::Plus : Branch::Minus; }

/// Point of the ξ-torus with branch bookkeeping.
struct QuasiMomentum {
  cplx xi{};
  Branch branch = Branch::Minus;
};

/// Inverse of cos as a biholomorphism onto the upper strip {Im > 0},
/// defined off the cut [-1, 1].
inline cplx acos_upper(cplx z) {
  if (std::abs(z - 1.0) < 1e-14 || std::abs(z + 1.0) < 1e-14)
    throw DomainError("acos: branch point at z = ±1");
  cplx w = std::acos(z);
  if (w.imag() < 0.0) w = -w;
  if (w.imag() == 0.0 && std::abs(z.imag()) == 0.0 && std::abs(z.real()) < 1.0)
    throw DomainError("acos: z on the cut; use a branch");
  return w;
}

/// Continuation of acos_upper through the cut (-1, 1). On real z in (-1, 1)
/// the Plus branch returns -arccos z and the Minus branch +arccos z; the two
/// branches are global negatives of each other. For |Re z| >= 1 both sides
/// fall back to the principal (upper-strip) map.
inline cplx acos_branch(cplx z, Branch side) {
  if (std::abs(z - 1.0) < 1e-14 || std::abs(z + 1.0) < 1e-14)
    throw DomainError("acos_branch: branch point at z = ±1");
  if (std::abs(z.real()) >= 1.0) return acos_upper(z);
  cplx plus;
  if (z.imag() > 0.0)
    plus = acos_upper(z);
  else if (z.imag() < 0.0)
    plus = std::conj(acos_upper(std::conj(z)));
  else
    plus = cplx(-std::acos(z.real()), 0.0);
  return side == Branch::Plus ? plus : -plus;
}

/// Band data of the constant-coin walk with 0 < ρ₀ < 1.
struct BandStructure {
  double rho0 = 0;
  double delta0 = 0;                 // ρ₀ cosh δ₀ = 1
  std::array<double, 2> I1{};        // ξ-interval [arccos ρ₀, π - arccos ρ₀]
  std::array<double, 2> I2{};        // -I1
  std::array<double, 4> edges{};     // the four edge values of λ
};

inline BandStructure make_band_structure(double rho0) {
  if (!(rho0 > 0.0 && rho0 < 1.0)) throw ValidationError("band structure: rho0 must be in (0,1)");
  BandStructure b;
  b.rho0 = rho0;
  b.delta0 = std::acosh(1.0 / rho0);
  const double e = std::acos(rho0);
  b.I1 = {e, std::numbers::pi - e};
  b.I2 = {-(std::numbers::pi - e), -e};
  b.edges = {e, std::numbers::pi - e, -e, -(std::numbers::pi - e)};
  return b;
}

/// λ_branch(ξ) solving cos λ = ρ₀ cos ξ, holomorphic on |Im ξ| < δ₀.
/// Real ξ on the Minus branch lands in [arccos ρ₀, π - arccos ρ₀].
inline cplx lambda_of_xi(const QuasiMomentum& q, double rho0) {
  const double delta0 = std::acosh(1.0 / rho0);
  if (std::abs(q.xi.imag()) >= delta0)
    throw DomainError("lambda_of_xi: |Im xi| must stay below delta0");
  if (q.xi.imag() == 0.0) {
    const double l = std::acos(rho0 * std::cos(q.xi.real()));
    return {q.branch == Branch::Minus ? l : -l, 0.0};
  }
  return acos_branch(rho0 * std::cos(q.xi), q.branch == Branch::Minus ? Branch::Minus : Branch::Plus);
}

struct LambdaDerivatives {
  double d1 = 0, d2 = 0, d3 = 0;
};

/// Closed-form ξ-derivatives of λ(ξ) = arccos(ρ₀ cos ξ) (Minus branch; the
/// Plus branch negates all three). max(|λ''|, |λ'''|) is bounded below on
/// the torus, which drives the t^{-1/3} stationary-phase estimate.
inline LambdaDerivatives lambda_derivatives(double xi, double rho0) {
  const double c = std::cos(xi), s = std::sin(xi);
  const double D2 = 1.0 - rho0 * rho0 * c * c;
  const double D = std::sqrt(D2);
  LambdaDerivatives out;
  out.d1 = rho0 * s / D;
  out.d2 = rho0 * (1.0 - rho0 * rho0) * c / (D2 * D);
  out.d3 = -rho0 * (1.0 - rho0 * rho0) * s * (1.0 + 2.0 * rho0 * rho0 * c * c) / (D2 * D2 * D);
  return out;
}

/// Free transfer matrix at spectral parameter λ (constant coin, θ = 0).
inline Mat2 free_transfer(cplx lambda, cplx alpha0) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  const cplx el = std::exp(iu * lambda);
  return (1.0 / rho0) * Mat2{el, alpha0, std::conj(alpha0), 1.0 / el};
}

/// Plane-wave eigenpair of the free transfer matrix at quasi-momentum ξ:
/// T φ_± = e^{±iξ} φ_±, with ‖φ_±(ξ)‖ = 1 on the real axis and the scaling
/// fixed so that det(φ₊ φ₋) = 2i ᾱ₀ ρ₀ sin ξ / √(A₊ A₋).
struct FreeEigenpair {
  QuasiMomentum q;
  cplx lambda{};
  Spinor phi_plus{}, phi_minus{};
  cplx A_plus{}, A_minus{};  // |α₀|² + (sin λ ∓ ρ₀ sin ξ)²
  bool near_degenerate = false;
};

inline FreeEigenpair free_eigenpair(const QuasiMomentum& q, cplx alpha0) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  FreeEigenpair e;
  e.q = q;
  e.lambda = lambda_of_xi(q, rho0);
  const cplx sl = std::sin(e.lambda), sx = std::sin(q.xi);
  const cplx sp = sl - rho0 * sx, sm = sl + rho0 * sx;
  e.A_plus = std::norm(alpha0) + sp * sp;
  e.A_minus = std::norm(alpha0) + sm * sm;
  e.near_degenerate = std::abs(e.A_plus) < 1e-8 || std::abs(e.A_minus) < 1e-8;
  // unimodular scaling c with c² = -ᾱ₀/α₀; keeps everything holomorphic
  const cplx c = iu * std::polar(1.0, -std::arg(alpha0));
  const cplx np = std::sqrt(e.A_plus), nm = std::sqrt(e.A_minus);
  e.phi_plus = {(-c * alpha0) / np, (c * iu * sp) / np};
  e.phi_minus = {(-c * alpha0) / nm, (c * iu * sm) / nm};
  return e;
}

/// Unnormalized variant, well conditioned across the whole strip (used by
/// the gap scans where A_± degenerates as λ → 0 or π).
inline FreeEigenpair free_eigenpair_raw(const QuasiMomentum& q, cplx alpha0) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  FreeEigenpair e;
  e.q = q;
  e.lambda = lambda_of_xi(q, rho0);
  const cplx sl = std::sin(e.lambda), sx = std::sin(q.xi);
  const cplx sp = sl - rho0 * sx, sm = sl + rho0 * sx;
  e.A_plus = std::norm(alpha0) + sp * sp;
  e.A_minus = std::norm(alpha0) + sm * sm;
  e.phi_plus = {-alpha0, iu * sp};
  e.phi_minus = {-alpha0, iu * sm};
  return e;
}

/// γ(ξ) with γ σ₁ conj(φ_±(ξ)) = φ_±(-ξ) on the real axis; both component
/// ratios must agree, which free_eigenpair's scaling guarantees.
inline cplx symmetry_factor(double xi, cplx alpha0) {
  const auto ep = free_eigenpair({cplx(xi, 0.0), Branch::Minus}, alpha0);
  const auto em = free_eigenpair({cplx(-xi, 0.0), Branch::Minus}, alpha0);
  const cplx g1 = em.phi_plus.up / std::conj(ep.phi_plus.down);
  const cplx g2 = em.phi_plus.down / std::conj(ep.phi_plus.up);
  if (std::abs(g1 - g2) > 1e-10)
    throw NumericalConsistencyError("symmetry factor: component ratios disagree");
  return g1;
}

struct Diagonalizer {
  Mat2 P{}, Pinv{};
};

/// P⁻¹ T P = diag(e^{iξ}, e^{-iξ}); refuses the degenerate corners.
inline Diagonalizer diagonalizer(const QuasiMomentum& q, cplx alpha0) {
  if (std::abs(std::sin(q.xi)) < 1e-12)
    throw DomainError("diagonalizer: degenerate at xi in {0, pi}; use the triangularizer");
  const auto e = free_eigenpair(q, alpha0);
  Diagonalizer d;
  d.P = {e.phi_plus.up, e.phi_minus.up, e.phi_plus.down, e.phi_minus.down};
  d.Pinv = d.P.inverse();
  return d;
}

struct Triangularizer {
  Mat2 P{}, Pinv{};
  Spinor phi_tilde{};
};

/// P̃ = (φ₊ φ̃) with (T - e^{-iξ}) φ̃ = φ₊ brings T to the Jordan-like form
/// [[e^{iξ}, 1], [0, e^{-iξ}]]; valid at the corners too.
inline Triangularizer triangularizer(const QuasiMomentum& q, cplx alpha0) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  const auto e = free_eigenpair(q, alpha0);
  const cplx c = iu * std::polar(1.0, -std::arg(alpha0));
  Triangularizer t;
  t.phi_tilde = {0.0, c * (-rho0) / std::sqrt(e.A_plus)};
  t.P = {e.phi_plus.up, t.phi_tilde.up, e.phi_plus.down, t.phi_tilde.down};
  t.Pinv = t.P.inverse();
  return t;
}

/// [[e^{iξ}, 1], [0, e^{-iξ}]]^x in closed form.
inline Mat2 jordan_power(cplx xi, long x) {
  const cplx up = std::exp(iu * xi * static_cast<double>(x));
  cplx s = 0;
  if (x > 0)
    for (long y = 0; y < x; ++y) s += std::exp(iu * xi * static_cast<double>(x - 1 - 2 * y));
  else if (x < 0)
    for (long y = 0; y < -x; ++y) s -= std::exp(-iu * xi * static_cast<double>(x + 1 + 2 * y));
  return {up, s, 0.0, 1.0 / up};
}

/// A_{ξ,±} = e^{∓iξ} T_{0,λ(ξ)}; eigenvalues 1 and e^{∓2iξ}.
inline Mat2 free_one_step(const QuasiMomentum& q, cplx alpha0, Side side) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  const cplx lambda = lambda_of_xi(q, rho0);
  const cplx ph = std::exp((side == Side::Plus ? -iu : iu) * q.xi);
  return ph * free_transfer(lambda, alpha0);
}

/// A_{ξ,±}^x by diagonal closed form away from the corners, by the Jordan
/// form at them. Bounded by min(|x|, |sin ξ|⁻¹) up to a constant.
inline Mat2 free_one_step_power(const QuasiMomentum& q, cplx alpha0, Side side, long x) {
  if (x == 0) return Mat2::identity();
  const cplx sgn = side == Side::Plus ? -iu : iu;
  if (std::abs(std::sin(q.xi)) > 1e-6) {
    const auto d = diagonalizer(q, alpha0);
    const cplx ephase = std::exp(sgn * q.xi * static_cast<double>(x));
    const cplx lp = ephase * std::exp(iu * q.xi * static_cast<double>(x));
    const cplx lm = ephase * std::exp(-iu * q.xi * static_cast<double>(x));
    return d.P * Mat2{lp, 0, 0, lm} * d.Pinv;
  }
  const auto t = triangularizer(q, alpha0);
  const cplx ephase = std::exp(sgn * q.xi * static_cast<double>(x));
  return ephase * (t.P * jordan_power(q.xi, x) * t.Pinv);
}

inline double A_power_norm(const QuasiMomentum& q, cplx alpha0, Side side, long x) {
  if ((side == Side::Plus && x > 0) || (side == Side::Minus && x < 0))
    throw DomainError("A_power_norm: requires ∓x >= 0 for side ±");
  return free_one_step_power(q, alpha0, side, x).op_norm();
}

/// det(φ₊ φ₋) of the free eigenvectors: 2i ᾱ₀ ρ₀ sin ξ / √(A₊ A₋).
inline cplx free_wronskian(const QuasiMomentum& q, cplx alpha0) {
  const auto e = free_eigenpair(q, alpha0);
  return e.phi_plus.up * e.phi_minus.down - e.phi_plus.down * e.phi_minus.up;
}

/// λ'(ξ)/W₀,ξ with the sin ξ factors cancelled analytically; regular on the
/// whole torus including the corners.
inline cplx spectral_weight(const QuasiMomentum& q, cplx alpha0) {
  const auto e = free_eigenpair(q, alpha0);
  const cplx sl = std::sin(e.lambda);
  return std::sqrt(e.A_plus) * std::sqrt(e.A_minus) / (2.0 * iu * std::conj(alpha0) * sl);
}

namespace detail {

/// Kernel block between two transfer solutions: left(x) pairs with right(y)
/// on x <= y, right(x) with left(y) on x >= y, split per component at x = y.
inline Mat2 kernel_combine(const Spinor& right_x, const Spinor& left_x, const Spinor& right_y,
                           const Spinor& left_y, int x, int y) {
  Mat2 out = Mat2::zero();
  // m₋(x) m₊(y)ᵀ σ₁ diag(1_{x<=y}, 1_{x<y})
  if (x <= y) {
    const Mat2 a = Mat2::outer(left_x, right_y) * sigma1;
    out += Mat2{a.a * 1.0, (x < y ? a.b : 0.0), a.c * 1.0, (x < y ? a.d : 0.0)};
  }
  // m₊(x) m₋(y)ᵀ σ₁ diag(1_{x>y}, 1_{x>=y})
  if (x >= y) {
    const Mat2 b = Mat2::outer(right_x, left_y) * sigma1;
    out += Mat2{(x > y ? b.a : 0.0), b.b * 1.0, (x > y ? b.c : 0.0), b.d * 1.0};
  }
  return out;
}

}  // namespace detail

/// Integral kernel of (𝒞₀ - e^{iλ(ξ)})⁻¹ between edge sites x, y.
inline Mat2 free_resolvent_kernel(const QuasiMomentum& q, cplx alpha0, int x, int y) {
  if (std::abs(std::sin(q.xi)) < 1e-12)
    throw DomainError("free resolvent: degenerate at xi in {0, pi}");
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  const cplx lambda = lambda_of_xi(q, rho0);
  const auto e = free_eigenpair(q, alpha0);
  const cplx w0 = free_wronskian(q, alpha0);
  const cplx pre = std::exp(iu * q.xi * static_cast<double>(std::abs(x - y))) * std::exp(-iu * lambda) / w0;
  return pre * detail::kernel_combine(e.phi_plus, e.phi_minus, e.phi_plus, e.phi_minus, x, y);
}

/// Uniform ξ-grid of N points over [0, 2π).
inline std::vector<double> xi_grid(int n) {
  if (n < 2 || (n & (n - 1)) != 0) throw ConfigError("xi grid: size must be a power of two");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * j / n;
  return g;
}

/// One branch's block of J_VE U₀^t P_arc J_EV by periodic-trapezoid
/// quadrature of the spectral representation.
inline Mat2 free_propagator_branch(long t, int x, int y, cplx alpha0, Branch branch, int grid_n) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  const auto grid = xi_grid(grid_n);
  Mat2 acc = Mat2::zero();
  for (double xi : grid) {
    const QuasiMomentum q{cplx(xi, 0.0), branch};
    const cplx lambda = lambda_of_xi(q, rho0);
    const auto e = free_eigenpair(q, alpha0);
    const cplx w = spectral_weight(q, alpha0);
    const cplx osc = std::exp(iu * (lambda * static_cast<double>(t) + q.xi * static_cast<double>(std::abs(x - y))));
    acc += (osc * w) * detail::kernel_combine(e.phi_plus, e.phi_minus, e.phi_plus, e.phi_minus, x, y);
  }
  return (1.0 / static_cast<double>(grid_n)) * acc;
}

/// Default block: the upper-arc (Minus-branch) projection U₀^t P₊.
inline Mat2 free_propagator(long t, int x, int y, cplx alpha0, int grid_n = 4096) {
  return free_propagator_branch(t, x, y, alpha0, Branch::Minus, grid_n);
}

/// Grid refinement: double from `start` until the value stabilizes below
/// `tol` at the probe, starting at 2^12 by default.
inline Mat2 free_propagator_auto(long t, int x, int y, cplx alpha0, Branch branch,
                                 int start = 4096, double tol = 1e-9) {
  Mat2 prev = free_propagator_branch(t, x, y, alpha0, branch, start);
  for (int n = 2 * start; n <= (1 << 20); n *= 2) {
    const Mat2 cur = free_propagator_branch(t, x, y, alpha0, branch, n);
    if ((cur - prev).frobenius_norm() < tol) return cur;
    prev = cur;
  }
  throw NumericalConsistencyError("free propagator: grid refinement did not stabilize");
}

/// Column of the free branch propagator over a window of x, one grid pass.
inline std::vector<Mat2> free_propagator_column(long t, int y, Window xs, cplx alpha0, Branch branch,
                                                int grid_n) {
  const double rho0 = std::sqrt(1.0 - std::norm(alpha0));
  const auto grid = xi_grid(grid_n);
  std::vector<Mat2> acc(static_cast<std::size_t>(xs.size()), Mat2::zero());
  std::vector<cplx> pow_cache(static_cast<std::size_t>(
                                  std::max(std::abs(xs.lo - y), std::abs(xs.hi - y))) + 1);
  for (double xi : grid) {
    const QuasiMomentum q{cplx(xi, 0.0), branch};
    const cplx lambda = lambda_of_xi(q, rho0);
    const auto e = free_eigenpair(q, alpha0);
    const cplx w = spectral_weight(q, alpha0);
    const cplx base = std::exp(iu * lambda * static_cast<double>(t)) * w;
    const cplx step = std::exp(iu * q.xi);
    cplx osc = 1.0;  // e^{iξ|x-y|}, built up incrementally from |x-y| = 0
    for (auto& p : pow_cache) {
      p = osc;
      osc *= step;
    }
    for (int x = xs.lo; x <= xs.hi; ++x) {
      const cplx pre = base * pow_cache[static_cast<std::size_t>(std::abs(x - y))];
      acc[static_cast<std::size_t>(x - xs.lo)] +=
          pre * detail::kernel_combine(e.phi_plus, e.phi_minus, e.phi_plus, e.phi_minus, x, y);
    }
  }
  for (auto& m : acc) m = (1.0 / static_cast<double>(grid_n)) * m;
  return acc;
}

}  // namespace qws
