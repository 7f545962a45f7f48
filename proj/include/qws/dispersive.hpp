#pragma once

#include <string>
#include <vector>

#include "qws/scattering.hpp"

namespace qws {

/// Per-branch spectral data feeding the oscillatory-integral propagator:
/// boundary Jost table plus the transmission samples.
struct SpectralBundle {
  JostTable table;
  ScatteringReport report;
};

inline SpectralBundle make_spectral_bundle(const CoinField& coin, Branch branch, int grid_n,
                                           Window window) {
  SpectralBundle b{solve_jost(coin, branch, grid_n, 0.0, window), {}};
  b.report = scattering_coefficients(b.table);
  return b;
}

/// Column x ∈ xs of the edge-space block J_VE U^t P_branch J_EV(·, y) by
/// periodic-trapezoid quadrature of e^{itλ(ξ)} e^{iξ|x-y|} (λ'/W₀) t(ξ)
/// against the Jost-solution products.
inline std::vector<Mat2> propagator_branch_column(const SpectralBundle& sb, long t, int y,
                                                  Window xs) {
  const JostTable& tb = sb.table;
  if (!tb.window.contains(xs) || !tb.window.contains(y))
    throw ConfigError("propagator: requested sites outside the Jost window");
  const int n = tb.grid_n;
  std::vector<Mat2> acc(static_cast<std::size_t>(xs.size()), Mat2::zero());
  std::vector<cplx> pow_cache(static_cast<std::size_t>(std::max(std::abs(xs.lo - y), std::abs(xs.hi - y))) + 1);
  for (int j = 0; j < n; ++j) {
    const QuasiMomentum q = tb.q(j);
    const cplx lambda = lambda_of_xi(q, tb.coin.rho0());
    const cplx weight = spectral_weight(q, tb.alpha0) * sb.report.t[static_cast<std::size_t>(j)];
    const cplx base = std::exp(iu * lambda * static_cast<double>(t)) * weight;
    const cplx step = std::exp(iu * q.xi);
    cplx osc = 1.0;
    for (auto& p : pow_cache) {
      p = osc;
      osc *= step;
    }
    for (int x = xs.lo; x <= xs.hi; ++x) {
      const cplx pre = base * pow_cache[static_cast<std::size_t>(std::abs(x - y))];
      acc[static_cast<std::size_t>(x - xs.lo)] +=
          pre * detail::kernel_combine(tb.mp(j, x), tb.mm(j, x), tb.mp(j, y), tb.mm(j, y), x, y);
    }
  }
  const bool gauged = !tb.gauge.trivial();
  for (int x = xs.lo; x <= xs.hi; ++x) {
    Mat2& m = acc[static_cast<std::size_t>(x - xs.lo)];
    m = (1.0 / static_cast<double>(n)) * m;
    if (gauged) m = tb.gauge.edge_phase(x, true) * m * tb.gauge.edge_phase(y, false);
  }
  return acc;
}

/// Edge-space block of J_VE U^t P_c J_EV: both branch contributions summed.
inline Mat2 propagator_kernel(const SpectralBundle& minus, const SpectralBundle& plus, long t,
                              int x, int y) {
  const Window xs{x, x};
  return propagator_branch_column(minus, t, y, xs)[0] + propagator_branch_column(plus, t, y, xs)[0];
}

/// Apply the kernel-route U^t P_c to a vertex-space state.
inline SpinorField propagate_kernel_route(const SpectralBundle& minus, const SpectralBundle& plus,
                                          long t, const SpinorField& u0, Window out_window) {
  const SpinorField v = vertex_to_edge(u0);
  const Window vs = v.support();
  const Window xe{out_window.lo, out_window.hi + 1};
  SpinorField acc(xe);
  for (int y = vs.lo; y <= vs.hi; ++y) {
    const Spinor vy = v[y];
    if (vy.up == cplx{} && vy.down == cplx{}) continue;
    const auto cm = propagator_branch_column(minus, t, y, xe);
    const auto cp = propagator_branch_column(plus, t, y, xe);
    for (int x = xe.lo; x <= xe.hi; ++x) {
      const std::size_t k = static_cast<std::size_t>(x - xe.lo);
      acc[x] += (cm[k] + cp[k]) * vy;
    }
  }
  SpinorField out = edge_to_vertex(acc);
  SpinorField res(out_window);
  for (int x = out_window.lo; x <= out_window.hi; ++x) res[x] = out.at(x);
  return res;
}

enum class DecayRoute { DirectEvolution, KernelQuadrature, Both };

struct DecayExperiment {
  CoinField coin;
  SpinorField initial;
  std::vector<long> t_schedule;
  DecayRoute route = DecayRoute::DirectEvolution;
  int kernel_grid = 4096;
  int window_margin = 8;
};

struct DecayRow {
  long t = 0;
  double supnorm = 0;
  double l2norm = 0;
  double ratio = 0;  // supnorm / ‖u₀‖₁
  std::string route;
};

inline std::vector<long> default_decay_schedule() {
  std::vector<long> t;
  for (int k = 0; k <= 15; ++k) t.push_back(std::lround(100.0 * std::pow(1.25, k)));
  return t;
}

/// Sup-norm decay of U^t P_c u₀, by direct in-cone evolution and/or the
/// oscillatory-integral kernel. The l²-norm stays constant along the direct
/// route (unitarity on the continuous subspace).
inline std::vector<DecayRow> run_decay(const DecayExperiment& exp) {
  if (exp.t_schedule.empty()) throw ConfigError("run_decay: empty schedule");
  const long tmax = *std::max_element(exp.t_schedule.begin(), exp.t_schedule.end());
  const double u0_l1 = exp.initial.l1_norm();
  if (u0_l1 == 0) throw ConfigError("run_decay: zero initial state");

  const auto projector = make_continuous_projector(exp.coin);
  std::vector<DecayRow> rows;

  if (exp.route == DecayRoute::DirectEvolution || exp.route == DecayRoute::Both) {
    const SpinorField pc = projector.apply(exp.initial);
    Window sup = pc.support();
    if (sup.size() == 0) sup = exp.initial.support();
    const Window w{sup.lo - static_cast<int>(tmax) - exp.window_margin,
                   sup.hi + static_cast<int>(tmax) + exp.window_margin};
    WalkOperator op(exp.coin, w);
    SpinorField state(w);
    for (int x = sup.lo; x <= sup.hi; ++x) state[x] = pc.at(x);
    long t = 0;
    std::vector<long> sched = exp.t_schedule;
    std::sort(sched.begin(), sched.end());
    for (long target : sched) {
      while (t < target) {
        state = apply_U(op, state);
        ++t;
      }
      rows.push_back({t, state.sup_norm(), state.l2_norm(), state.sup_norm() / u0_l1, "direct"});
    }
  }

  if (exp.route == DecayRoute::KernelQuadrature || exp.route == DecayRoute::Both) {
    const Window isup = exp.initial.support();
    const Window kw{isup.lo - static_cast<int>(tmax) - exp.window_margin,
                    isup.hi + static_cast<int>(tmax) + exp.window_margin};
    // resolution guard: the phase tλ(ξ) + |x-y|ξ needs several grid points
    // per oscillation
    const long span = std::max<long>(tmax, kw.hi - kw.lo);
    if (exp.kernel_grid < 4 * span)
      throw ConfigError("run_decay: kernel grid too coarse for the requested horizon");
    const auto minus = make_spectral_bundle(exp.coin, Branch::Minus, exp.kernel_grid, kw);
    const auto plus = make_spectral_bundle(exp.coin, Branch::Plus, exp.kernel_grid, kw);
    for (long t : exp.t_schedule) {
      const Window cone{isup.lo - static_cast<int>(t) - 2, isup.hi + static_cast<int>(t) + 2};
      const SpinorField s = propagate_kernel_route(minus, plus, t, exp.initial, cone);
      rows.push_back({t, s.sup_norm(), s.l2_norm(), s.sup_norm() / u0_l1, "kernel"});
    }
  }
  return rows;
}

struct DecayFit {
  double exponent = 0;
  double stderr_ = 0;
  int n_points = 0;
};

/// Least-squares slope of log(value) against log(t) over the decreasing
/// upper envelope (running-maximum records from the right) of the series.
inline DecayFit fit_decay(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 8) throw ConfigError("fit_decay: need at least 8 points");
  double tmin = 1e300, tmax = 0;
  for (const auto& [t, v] : series) {
    if (t <= 0 || v < 0) throw ConfigError("fit_decay: nonpositive abscissa");
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  if (std::log10(tmax / tmin) < 1.2)
    throw ConfigError("fit_decay: series must span at least 1.2 decades");

  // envelope: keep points not dominated by any later point
  std::vector<std::pair<double, double>> env;
  double running = 0;
  for (auto it = series.rbegin(); it != series.rend(); ++it) {
    if (it->second >= running) {
      env.push_back(*it);
      running = it->second;
    }
  }
  std::reverse(env.begin(), env.end());

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, v] : env) {
    const double x = std::log(t), y = std::log(std::max(v, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(env.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw ConfigError("fit_decay: degenerate abscissas");
  DecayFit fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  fit.n_points = static_cast<int>(env.size());
  double ss = 0;
  for (const auto& [t, v] : env) {
    const double x = std::log(t), y = std::log(std::max(v, 1e-300));
    const double yhat = (sy - fit.exponent * sx) / n + fit.exponent * x;
    ss += (y - yhat) * (y - yhat);
  }
  if (env.size() > 2) fit.stderr_ = std::sqrt(ss / (n - 2) / (sxx - sx * sx / n));
  return fit;
}

struct VanDerCorput {
  cplx integral{};
  double bound = 0;
  double derivative_floor = 0;
  double wiener = 0;
};

/// Quadrature of ∫ e^{itφ} g dξ on a uniform grid over [a, b] together with
/// the certified stationary-phase bound C_m (t·min|φ^{(m)}|)^{-1/m} ‖g‖_A.
/// The m-th derivative floor is estimated by finite differences and must be
/// positive on the whole interval.
inline VanDerCorput van_der_corput_bound(const std::vector<double>& phase,
                                         const std::vector<cplx>& g, double a, double b, double t,
                                         int m) {
  if (m != 2 && m != 3) throw ConfigError("van_der_corput: m must be 2 or 3");
  if (phase.size() != g.size() || phase.size() < 16)
    throw ConfigError("van_der_corput: bad sample arrays");
  const std::size_t n = phase.size();
  const double h = (b - a) / static_cast<double>(n - 1);

  double floor_val = 1e300;
  for (std::size_t k = 2; k + 2 < n; ++k) {
    double d;
    if (m == 2)
      d = (phase[k + 1] - 2 * phase[k] + phase[k - 1]) / (h * h);
    else
      d = (phase[k + 2] - 2 * phase[k + 1] + 2 * phase[k - 1] - phase[k - 2]) / (2 * h * h * h);
    floor_val = std::min(floor_val, std::abs(d));
  }
  if (floor_val < 1e-12)
    throw DomainError("van_der_corput: derivative floor violated; split the interval");

  cplx integral = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double wgt = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    integral += wgt * std::exp(iu * cplx(t * phase[k])) * g[k];
  }
  integral *= h;

  // ‖g‖_A over [a, b) treated as the period (power-of-two prefix of samples)
  std::size_t np = 1;
  while (np * 2 <= n - 1) np *= 2;
  std::vector<cplx> per(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(np));
  const double wn = wiener_norm(per, 0);

  VanDerCorput out;
  out.integral = integral;
  out.derivative_floor = floor_val;
  out.wiener = wn;
  const double cm = 5.0 * std::pow(2.0, m - 1) - 2.0;
  out.bound = cm * std::pow(t * floor_val, -1.0 / m) * wn;
  return out;
}

}  // namespace qws
