#pragma once

#include <utility>
#include <vector>

#include "qws/coin.hpp"
#include "qws/dispersion.hpp"
#include "qws/fftutil.hpp"
#include "qws/parallel.hpp"

namespace qws {

/// Site transfer matrix T_λ(x): propagates edge-space solutions of
/// U u = e^{iλ} u one site to the right. Unimodular; built from the reduced
/// (real-β) coin data ρ(x), θ(x), α(x).
inline Mat2 transfer_matrix(const CoinField& coin, int x, cplx lambda) {
  const CoinPoint& p = coin.at(x);
  const double rho = p.rho();
  if (rho <= 0.0) throw DomainError("transfer_matrix: rho(x) vanishes (decoupled site)");
  const cplx e = std::exp(iu * (lambda - cplx(p.theta)));
  return (1.0 / rho) * Mat2{e, p.alpha, std::conj(p.alpha), 1.0 / e};
}

/// Perturbation V_{ξ,±}(x) = e^{∓iξ} (T_{λ(ξ)}(x) - T_{0,λ(ξ)}); vanishes
/// off the coin support and is summable with the coin's perturbation norm.
inline Mat2 potential(const CoinField& coin, const QuasiMomentum& q, Side side, int x) {
  const double rho0 = coin.rho0();
  const cplx lambda = lambda_of_xi(q, rho0);
  const cplx ph = std::exp((side == Side::Plus ? -iu : iu) * q.xi);
  return ph * (transfer_matrix(coin, x, lambda) - free_transfer(lambda, coin.alpha0()));
}

/// Spatial mirror of a reduced coin: entries at x map to -x-1 with
/// α ↦ -ᾱ, θ unchanged. The + side Jost machinery on the mirror produces
/// the - side of the original through σ₁ conjugation.
inline CoinField mirror_coin(const CoinField& coin) {
  CoinField out(-std::conj(coin.alpha0()));
  for (const auto& [x, p] : coin.entries()) {
    out.set_entry(-x - 1, CoinPoint(-std::conj(p.alpha), cplx(std::abs(p.beta), 0.0), p.theta));
  }
  return out;
}

namespace detail {

/// Backward substitution of the + side Volterra sum
///   m(x) = φ₊ - Σ_{y >= x} A^{-(y+1-x)} V(y) m(y)
/// on [w.lo, w.hi], exact because V has finite support.
inline std::vector<Spinor> solve_m_plus(const CoinField& coin, const QuasiMomentum& q,
                                        const Spinor& phi_plus, Window w) {
  const double rho0 = coin.rho0();
  const cplx lambda = lambda_of_xi(q, rho0);
  const cplx ph = std::exp(-iu * q.xi);
  const Mat2 A = ph * free_transfer(lambda, coin.alpha0());
  const Mat2 Ainv = A.inverse();
  const Window sup = coin.support();

  std::vector<Spinor> m(static_cast<std::size_t>(w.size()));
  auto at = [&](int x) -> Spinor& { return m[static_cast<std::size_t>(x - w.lo)]; };

  const int right = sup.size() > 0 ? std::min(sup.hi, w.hi) : w.lo - 1;
  for (int x = std::max(right + 1, w.lo); x <= w.hi; ++x) at(x) = phi_plus;
  if (right < w.lo) return m;

  Spinor tail{};  // T(x) = Σ_{y > x} A^{-(y-x)} V(y) m(y); T(right) = 0
  for (int x = right; x >= w.lo; --x) {
    const Mat2 M = ph * transfer_matrix(coin, x, lambda);  // A + V(x)
    at(x) = M.inverse() * (phi_plus - tail);
    if (at(x).norm() > 1e12)
      throw SolverError("jost solver: solution blew up at x = " + std::to_string(x));
    const Mat2 V = M - A;
    tail = Ainv * (V * at(x) + tail);  // T(x-1)
  }
  return m;
}

/// Forward substitution of the - side Volterra sum
///   m(x) = φ₋ + Σ_{y < x} A^{x-y-1} V(y) m(y); verification oracle.
inline std::vector<Spinor> solve_m_minus_forward(const CoinField& coin, const QuasiMomentum& q,
                                                 const Spinor& phi_minus, Window w) {
  const double rho0 = coin.rho0();
  const cplx lambda = lambda_of_xi(q, rho0);
  const cplx ph = std::exp(iu * q.xi);
  const Mat2 A = ph * free_transfer(lambda, coin.alpha0());
  const Window sup = coin.support();

  std::vector<Spinor> m(static_cast<std::size_t>(w.size()));
  auto at = [&](int x) -> Spinor& { return m[static_cast<std::size_t>(x - w.lo)]; };

  const int left = sup.size() > 0 ? std::max(sup.lo, w.lo) : w.hi + 1;
  for (int x = w.lo; x <= std::min(left, w.hi); ++x) at(x) = phi_minus;
  if (left > w.hi) return m;

  Spinor run{};  // Σ_{y < x} A^{x-y-1} V(y) m(y)
  for (int x = left + 1; x <= w.hi; ++x) {
    const Mat2 M = ph * transfer_matrix(coin, x - 1, lambda);
    const Mat2 V = M - A;
    run = A * run + V * at(x - 1);
    at(x) = phi_minus + run;
    if (at(x).norm() > 1e12)
      throw SolverError("jost solver: solution blew up at x = " + std::to_string(x));
  }
  return m;
}

}  // namespace detail

/// Jost modifiers m_±(x, ξ) on a ξ-grid (optionally shifted into the upper
/// strip by iδ) over a window containing the coin support. The stored coin
/// is the gauge-reduced one; `gauge` maps results back to the input walk.
struct JostTable {
  Branch branch = Branch::Minus;
  double delta = 0.0;
  int grid_n = 0;
  std::vector<double> xi_base;
  Window window{};
  CoinField coin;      // reduced
  GaugePhase gauge;    // reduces the original coin
  cplx alpha0{};

  std::vector<Spinor> m_plus, m_minus;  // [grid][site], row-major in grid
  std::vector<double> residual;         // max recursion residual per grid point

  QuasiMomentum q(int j) const { return {cplx(xi_base[static_cast<std::size_t>(j)], delta), branch}; }
  int minus_index(int j) const { return j == 0 ? 0 : grid_n - j; }

  const Spinor& mp(int j, int x) const {
    return m_plus[static_cast<std::size_t>(j) * static_cast<std::size_t>(window.size()) +
                  static_cast<std::size_t>(x - window.lo)];
  }
  const Spinor& mm(int j, int x) const {
    return m_minus[static_cast<std::size_t>(j) * static_cast<std::size_t>(window.size()) +
                   static_cast<std::size_t>(x - window.lo)];
  }

  /// ξ-samples of one component for fixed x (for Wiener-norm analysis).
  std::vector<Spinor> samples(Side side, int x) const {
    std::vector<Spinor> out(static_cast<std::size_t>(grid_n));
    for (int j = 0; j < grid_n; ++j) out[static_cast<std::size_t>(j)] = side == Side::Plus ? mp(j, x) : mm(j, x);
    return out;
  }
};

namespace detail {

/// Scalar matching σ₁ φ₋(ξ) = c(ξ) φ'₊(ξ) between the original - side and
/// the mirror coin's + side free vectors.
inline cplx mirror_match(const Spinor& phi_minus, const Spinor& phi_plus_mirror) {
  const Spinor lhs{phi_minus.down, phi_minus.up};
  const cplx c1 = lhs.up / phi_plus_mirror.up;
  const cplx c2 = lhs.down / phi_plus_mirror.down;
  if (std::abs(c1 - c2) > 1e-9 * std::max(1.0, std::abs(c1)))
    throw NumericalConsistencyError("jost mirror: matching scalar inconsistent");
  return std::abs(phi_plus_mirror.up) >= std::abs(phi_plus_mirror.down) ? c1 : c2;
}

}  // namespace detail

/// Solve for both Jost modifiers on the grid ξ_j = 2πj/N + iδ.
/// The - side is produced by re-running the + side machinery on the mirrored
/// coin (one code path); solve_m_minus_forward remains as a cross-check.
/// Grid points are independent, so the sweep parallelizes with a
/// deterministic layout.
inline JostTable solve_jost(const CoinField& input_coin, Branch branch, int grid_n, double delta,
                            Window window, int threads = 1) {
  if (grid_n < 2 || (grid_n & (grid_n - 1)) != 0)
    throw ConfigError("solve_jost: grid size must be a power of two");
  auto [coin, gauge] = gauge_reduce(input_coin);
  const double rho0 = coin.rho0();
  const double delta0 = std::acosh(1.0 / rho0);
  if (delta < 0.0 || delta >= delta0) throw DomainError("solve_jost: delta must lie in [0, delta0)");
  const Window sup = coin.support();
  if (sup.size() > 0 && !window.contains(sup))
    throw ConfigError("solve_jost: window must contain the coin support");

  JostTable t;
  t.branch = branch;
  t.delta = delta;
  t.grid_n = grid_n;
  t.xi_base = xi_grid(grid_n);
  t.window = window;
  t.coin = coin;
  t.gauge = gauge;
  t.alpha0 = coin.alpha0();

  const CoinField mir = mirror_coin(coin);
  const Window mwin{-window.hi, -window.lo};
  const std::size_t nx = static_cast<std::size_t>(window.size());
  t.m_plus.resize(static_cast<std::size_t>(grid_n) * nx);
  t.m_minus.resize(static_cast<std::size_t>(grid_n) * nx);
  t.residual.assign(static_cast<std::size_t>(grid_n), 0.0);

  parallel_for(grid_n, threads, [&](int j) {
    const QuasiMomentum q = t.q(j);
    const auto free = free_eigenpair(q, coin.alpha0());
    const auto free_mir = free_eigenpair(q, mir.alpha0());
    const cplx c = detail::mirror_match(free.phi_minus, free_mir.phi_plus);

    const auto mp = detail::solve_m_plus(coin, q, free.phi_plus, window);
    const auto mpm = detail::solve_m_plus(mir, q, free_mir.phi_plus, mwin);
    for (int x = window.lo; x <= window.hi; ++x) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(x - window.lo);
      t.m_plus[k] = mp[static_cast<std::size_t>(x - window.lo)];
      const Spinor& w = mpm[static_cast<std::size_t>(-x - mwin.lo)];
      t.m_minus[k] = {c * w.down, c * w.up};  // c σ₁ m'₊(-x)
    }

    // recursion residual of m(x+1) = e^{∓iξ} T_λ(x) m(x) on the interior
    const cplx lambda = lambda_of_xi(q, rho0);
    double worst = 0;
    for (int x = window.lo; x < window.hi; ++x) {
      const Mat2 Tm = transfer_matrix(coin, x, lambda);
      const Spinor rp = t.mp(j, x + 1) - std::exp(-iu * q.xi) * (Tm * t.mp(j, x));
      const Spinor rm = t.mm(j, x + 1) - std::exp(iu * q.xi) * (Tm * t.mm(j, x));
      worst = std::max({worst, rp.norm(), rm.norm()});
    }
    t.residual[static_cast<std::size_t>(j)] = worst;
  });
  return t;
}

/// Picard iteration on the + side Volterra sum; slow cross-check of the
/// backward substitution.
inline std::vector<Spinor> jost_plus_iterative(const CoinField& input_coin, const QuasiMomentum& q,
                                               Window w, int iterations = 64) {
  auto [coin, gauge] = gauge_reduce(input_coin);
  const auto free = free_eigenpair(q, coin.alpha0());
  const double rho0 = coin.rho0();
  const cplx lambda = lambda_of_xi(q, rho0);
  const cplx ph = std::exp(-iu * q.xi);
  const Mat2 A = ph * free_transfer(lambda, coin.alpha0());
  const Window sup = coin.support();
  std::vector<Spinor> m(static_cast<std::size_t>(w.size()), free.phi_plus);
  if (sup.size() == 0) return m;
  for (int it = 0; it < iterations; ++it) {
    std::vector<Spinor> next(static_cast<std::size_t>(w.size()), free.phi_plus);
    for (int x = w.lo; x <= w.hi; ++x) {
      Spinor acc{};
      for (int y = std::max(x, sup.lo); y <= std::min(sup.hi, w.hi); ++y) {
        const Mat2 V = ph * transfer_matrix(coin, y, lambda) - A;
        acc += matrix_power(A, -(y + 1 - x)) * (V * m[static_cast<std::size_t>(y - w.lo)]);
      }
      next[static_cast<std::size_t>(x - w.lo)] = free.phi_plus - acc;
    }
    m = std::move(next);
  }
  return m;
}

/// det(m₊(x), m₋(x)) is x-independent; evaluated mid-window.
inline cplx wronskian(const JostTable& t, int j) {
  const int x0 = t.window.contains(0) ? 0 : (t.window.lo + t.window.hi) / 2;
  const Spinor a = t.mp(j, x0), b = t.mm(j, x0);
  return a.up * b.down - a.down * b.up;
}

/// Largest x-variation of the Wronskian across the window (sanity measure).
inline double wronskian_variation(const JostTable& t, int j) {
  const cplx w = wronskian(t, j);
  double worst = 0;
  for (int x = t.window.lo; x <= t.window.hi; ++x) {
    const Spinor a = t.mp(j, x), b = t.mm(j, x);
    worst = std::max(worst, std::abs(a.up * b.down - a.down * b.up - w));
  }
  return worst;
}

}  // namespace qws
