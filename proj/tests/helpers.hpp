#pragma once

#include <functional>
#include <random>

#include "qws/coin.hpp"
#include "qws/lattice.hpp"

namespace qwstest {

using qws::cplx;
using qws::CoinField;
using qws::CoinPoint;
using qws::Spinor;
using qws::SpinorField;
using qws::Window;

inline double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline cplx ucplx(std::mt19937_64& rng) { return {u01(rng) - 0.5, u01(rng) - 0.5}; }

inline SpinorField random_field(Window w, std::mt19937_64& rng, bool normalize_l2 = false) {
  SpinorField u(w);
  for (int x = w.lo; x <= w.hi; ++x) u[x] = {ucplx(rng), ucplx(rng)};
  if (normalize_l2) {
    const double n = u.l2_norm();
    for (int x = w.lo; x <= w.hi; ++x) u[x] = (1.0 / n) * u[x];
  }
  return u;
}

inline CoinPoint random_coin_point(std::mt19937_64& rng) {
  const double r = 0.95 * u01(rng);
  const cplx alpha = std::polar(r, 2 * std::numbers::pi * (u01(rng) - 0.5));
  const cplx beta = std::polar(std::sqrt(1.0 - r * r), 2 * std::numbers::pi * (u01(rng) - 0.5));
  return CoinPoint(alpha, beta, 2 * std::numbers::pi * (u01(rng) - 0.5));
}

inline cplx hadamard_alpha0() { return {1.0 / std::numbers::sqrt2, 0.0}; }

/// Single modulus-shrink defect: |alpha(site) - alpha0| = strength.
inline CoinField defect_coin(double strength, int site = 0, double theta = 0.0) {
  CoinField c(hadamard_alpha0());
  const cplx a = c.alpha0() * (1.0 - strength / std::abs(c.alpha0()));
  c.set_entry(site, CoinPoint(a, std::nullopt, theta));
  return c;
}

/// Two equal defects at x = 0 and x = 2; sweeps through an exceptional point
/// near s = 0.707.
inline CoinField two_defect_coin(double s) {
  CoinField c(hadamard_alpha0());
  const cplx a = c.alpha0() * (1.0 - s / std::abs(c.alpha0()));
  c.set_entry(0, CoinPoint(a, std::nullopt, 0.0));
  c.set_entry(2, CoinPoint(a, std::nullopt, 0.0));
  return c;
}

inline SpinorField delta_field(int x0 = 0, Spinor s = {1.0, 0.0}) {
  SpinorField u(Window{x0, x0});
  u[x0] = s;
  return u;
}

inline double max_diff(const SpinorField& a, const SpinorField& b) {
  const Window w{std::min(a.window().lo, b.window().lo), std::max(a.window().hi, b.window().hi)};
  double worst = 0;
  for (int x = w.lo; x <= w.hi; ++x) worst = std::max(worst, (a.at(x) - b.at(x)).norm());
  return worst;
}

inline double fd_derivative(const std::function<double(double)>& f, double x, int order, double h) {
  switch (order) {
    case 1:
      return (f(x + h) - f(x - h)) / (2 * h);
    case 2:
      return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
    case 3:
      return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
    default:
      return 0;
  }
}

}  // namespace qwstest
