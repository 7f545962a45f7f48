#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "qws/evolution.hpp"
#include "qws/jost.hpp"

namespace qws {

/// Transmission/reflection data of one branch on a real ξ-grid.
struct ScatteringReport {
  Branch branch = Branch::Minus;
  int grid_n = 0;
  std::vector<double> xi;
  std::vector<cplx> W, t, r_plus, r_minus;
  std::vector<bool> corner_extrapolated;  // per grid point; only 0 and N/2 can be set
  double unitarity_defect = 0;     // max | |t|²+|r_±|² - 1 | off extrapolated corners
  double t_consistency = 0;        // max deviation between the det-based t routes
  double min_offcorner_absW = 0;
  double edge_tol = 0;
  double median_absW = 0;
};

namespace detail {

inline double median_abs(std::vector<double> v) {
  if (v.empty()) return 0;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

/// One-sided quartic (5-point Lagrange) extrapolation to grid index j0 from
/// the interior side.
inline cplx extrapolate_corner(const std::vector<cplx>& f, int j0, int n) {
  cplx acc = 0;
  const double x0 = j0;
  std::array<double, 5> xs{};
  std::array<cplx, 5> ys{};
  for (int k = 0; k < 5; ++k) {
    const int j = (j0 + 1 + k) % n;
    xs[static_cast<std::size_t>(k)] = j0 + 1 + k;
    ys[static_cast<std::size_t>(k)] = f[static_cast<std::size_t>(j)];
  }
  for (int k = 0; k < 5; ++k) {
    double w = 1;
    for (int l = 0; l < 5; ++l)
      if (l != k) w *= (x0 - xs[static_cast<std::size_t>(l)]) / (xs[static_cast<std::size_t>(k)] - xs[static_cast<std::size_t>(l)]);
    acc += w * ys[static_cast<std::size_t>(k)];
  }
  return acc;
}

}  // namespace detail

/// Wronskian W_ξ, the Jost coefficients t = W₀/W and
/// r_± = -det(φ₊(·,∓ξ), φ₋(·,±ξ))/W, with |t|² + |r_±|² = 1 on the interior.
/// Generic corners evaluate directly (t = 0, |r| = 1); corners with
/// |W| below the edge tolerance are filled by one-sided quartic
/// extrapolation and flagged.
inline ScatteringReport scattering_coefficients(const JostTable& table) {
  if (table.delta != 0.0)
    throw ConfigError("scattering_coefficients: needs a boundary (delta = 0) table");
  const int n = table.grid_n;
  ScatteringReport rep;
  rep.branch = table.branch;
  rep.grid_n = n;
  rep.xi = table.xi_base;
  rep.W.resize(static_cast<std::size_t>(n));
  rep.t.resize(static_cast<std::size_t>(n));
  rep.r_plus.resize(static_cast<std::size_t>(n));
  rep.r_minus.resize(static_cast<std::size_t>(n));
  rep.corner_extrapolated.assign(static_cast<std::size_t>(n), false);

  const int x0 = table.window.contains(0) ? 0 : (table.window.lo + table.window.hi) / 2;
  auto det2 = [](const Spinor& a, const Spinor& b) { return a.up * b.down - a.down * b.up; };

  std::vector<double> absW(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    rep.W[static_cast<std::size_t>(j)] = wronskian(table, j);
    absW[static_cast<std::size_t>(j)] = std::abs(rep.W[static_cast<std::size_t>(j)]);
  }
  rep.median_absW = detail::median_abs(absW);
  rep.edge_tol = 1e-8 * rep.median_absW;

  rep.min_offcorner_absW = 1e300;
  for (int j = 0; j < n; ++j) {
    if (j == 0 || j == n / 2) continue;
    rep.min_offcorner_absW = std::min(rep.min_offcorner_absW, absW[static_cast<std::size_t>(j)]);
  }
  if (rep.min_offcorner_absW < 1e-12 * rep.median_absW)
    throw NumericalConsistencyError("scattering: Wronskian vanishes off the band edges");

  for (int j = 0; j < n; ++j) {
    const bool corner = (j == 0 || j == n / 2);
    const cplx W = rep.W[static_cast<std::size_t>(j)];
    if (corner && std::abs(W) < 10.0 * rep.edge_tol) {
      rep.corner_extrapolated[static_cast<std::size_t>(j)] = true;
      continue;  // filled after the sweep
    }
    const int jm = table.minus_index(j);
    const cplx W0 = free_wronskian(table.q(j), table.alpha0);
    rep.t[static_cast<std::size_t>(j)] = W0 / W;
    // the Jost-solution phases e^{±iξx} cancel inside W but not in the
    // reflection determinants, which mix ξ and -ξ
    const cplx ph = std::exp(-2.0 * iu * table.q(j).xi * static_cast<double>(x0));
    rep.r_plus[static_cast<std::size_t>(j)] = -ph * det2(table.mp(jm, x0), table.mm(j, x0)) / W;
    rep.r_minus[static_cast<std::size_t>(j)] = -(1.0 / ph) * det2(table.mp(j, x0), table.mm(jm, x0)) / W;
  }
  for (int j : {0, n / 2}) {
    if (!rep.corner_extrapolated[static_cast<std::size_t>(j)]) continue;
    rep.t[static_cast<std::size_t>(j)] = detail::extrapolate_corner(rep.t, j, n);
    rep.r_plus[static_cast<std::size_t>(j)] = detail::extrapolate_corner(rep.r_plus, j, n);
    rep.r_minus[static_cast<std::size_t>(j)] = detail::extrapolate_corner(rep.r_minus, j, n);
  }

  for (int j = 0; j < n; ++j) {
    if (rep.corner_extrapolated[static_cast<std::size_t>(j)]) continue;
    const double tt = std::norm(rep.t[static_cast<std::size_t>(j)]);
    rep.unitarity_defect = std::max(
        {rep.unitarity_defect, std::abs(tt + std::norm(rep.r_plus[static_cast<std::size_t>(j)]) - 1.0),
         std::abs(tt + std::norm(rep.r_minus[static_cast<std::size_t>(j)]) - 1.0)});
    // independent determinant routes to t
    if (j != 0 && j != n / 2) {
      const int jm = table.minus_index(j);
      const cplx W = rep.W[static_cast<std::size_t>(j)];
      const cplx tp = -det2(table.mp(jm, x0), table.mp(j, x0)) / W;
      const cplx tm = det2(table.mm(jm, x0), table.mm(j, x0)) / W;
      rep.t_consistency = std::max({rep.t_consistency, std::abs(tp - rep.t[static_cast<std::size_t>(j)]),
                                    std::abs(tm - rep.t[static_cast<std::size_t>(j)])});
    }
  }
  return rep;
}

/// Classification of one spectral-band edge.
struct EdgeClassification {
  enum class Kind { Generic, Exceptional, Indeterminate };
  Branch branch = Branch::Minus;
  double xi0 = 0;  // 0 or π
  cplx W_edge{};
  double abs_W = 0;
  double tol = 0;
  Kind kind = Kind::Generic;
  std::optional<SpinorField> bounded_solution;  // vertex space, sup-normalized
};

/// Evaluates the Wronskian at ξ ∈ {0, π} on both branches. |W| below the
/// edge tolerance marks a resonance (a bounded edge solution exists, and is
/// emitted); within 10× of the tolerance the verdict is Indeterminate.
inline std::vector<EdgeClassification> resonance_classify(const CoinField& coin, int grid_n = 512) {
  std::vector<EdgeClassification> out;
  for (Branch b : {Branch::Minus, Branch::Plus}) {
    Window w = coin.support().size() > 0 ? coin.support().expanded(8) : Window{-8, 8};
    if (!w.contains(0)) w = Window{std::min(w.lo, -1), std::max(w.hi, 1)};
    const JostTable table = solve_jost(coin, b, grid_n, 0.0, w);
    std::vector<double> absW(static_cast<std::size_t>(grid_n));
    for (int j = 0; j < grid_n; ++j) absW[static_cast<std::size_t>(j)] = std::abs(wronskian(table, j));
    const double tol = 1e-8 * detail::median_abs(absW);
    for (int j : {0, grid_n / 2}) {
      EdgeClassification e;
      e.branch = b;
      e.xi0 = table.xi_base[static_cast<std::size_t>(j)];
      e.W_edge = wronskian(table, j);
      e.abs_W = std::abs(e.W_edge);
      e.tol = tol;
      if (e.abs_W < tol)
        e.kind = EdgeClassification::Kind::Exceptional;
      else if (e.abs_W < 10.0 * tol)
        e.kind = EdgeClassification::Kind::Indeterminate;
      else
        e.kind = EdgeClassification::Kind::Generic;
      if (e.kind == EdgeClassification::Kind::Exceptional) {
        SpinorField v(table.window);
        for (int x = table.window.lo; x <= table.window.hi; ++x) {
          const cplx ph = std::exp(iu * cplx(e.xi0) * static_cast<double>(x));
          v[x] = ph * table.mp(j, x);
        }
        SpinorField u = table.gauge.apply(edge_to_vertex(v), true);
        const double s = u.sup_norm();
        if (s > 0)
          for (int x = u.window().lo; x <= u.window().hi; ++x) u[x] = (1.0 / s) * u[x];
        e.bounded_solution = std::move(u);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

/// One point of the discrete spectrum.
struct BoundState {
  Branch branch = Branch::Minus;
  double segment = 0;      // Re ξ of the gap segment: 0 or π
  double delta = 0;        // Im ξ at the Wronskian zero
  double lambda = 0;       // eigenvalue angle
  cplx eigenvalue{};       // e^{iλ}
  double decay_rate = 0;   // spatial decay exponent of the eigenvector
  SpinorField eigenvector; // vertex space, l²-normalized
  double eigen_residual = 0;
};

struct BoundStateOptions {
  int scan_points = 256;
  double zero_tol = 1e-9;     // relative to the scan's largest |W|
  int max_halfwidth = 2500;   // eigenvector window clamp
};

namespace detail {

/// Raw (unnormalized plane-wave) Wronskian along a gap segment; zeros of
/// this function mark the discrete spectrum.
inline cplx gap_wronskian(const CoinField& coin, const CoinField& mir, Branch branch, cplx xi,
                          Window w) {
  const QuasiMomentum q{xi, branch};
  const auto raw = free_eigenpair_raw(q, coin.alpha0());
  const auto raw_mir = free_eigenpair_raw(q, mir.alpha0());
  const auto mp = solve_m_plus(coin, q, raw.phi_plus, w);
  const Window mwin{-w.hi, -w.lo};
  const auto mpm = solve_m_plus(mir, q, raw_mir.phi_plus, mwin);
  const int x0 = w.contains(0) ? 0 : (w.lo + w.hi) / 2;
  const Spinor a = mp[static_cast<std::size_t>(x0 - w.lo)];
  const Spinor wv = mpm[static_cast<std::size_t>(-x0 - mwin.lo)];
  const Spinor b{wv.down, wv.up};  // σ₁ m'₊(-x), unnormalized - side
  return a.up * b.down - a.down * b.up;
}

}  // namespace detail

/// Locate the discrete spectrum by scanning the four gap segments
/// ξ = iδ and ξ = π + iδ, δ ∈ (0, δ₀), on both branches for zeros of the
/// Wronskian, refining each candidate by a secant iteration.
inline std::vector<BoundState> bound_states(const CoinField& input_coin,
                                            const BoundStateOptions& opt = {}) {
  auto [coin, gauge] = gauge_reduce(input_coin);
  const double rho0 = coin.rho0();
  const double delta0 = std::acosh(1.0 / rho0);
  const CoinField mir = mirror_coin(coin);
  Window w = coin.support().size() > 0 ? coin.support().expanded(4) : Window{-4, 4};
  if (!w.contains(0)) w = Window{std::min(w.lo, 0), std::max(w.hi, 0)};

  std::vector<BoundState> out;
  for (Branch b : {Branch::Minus, Branch::Plus}) {
    for (double seg : {0.0, std::numbers::pi}) {
      auto Wof = [&](double d) { return detail::gap_wronskian(coin, mir, b, cplx(seg, d), w); };
      const int M = opt.scan_points;
      std::vector<double> ds(static_cast<std::size_t>(M));
      std::vector<cplx> ws(static_cast<std::size_t>(M));
      double scan_max = 0;
      for (int k = 0; k < M; ++k) {
        const double d = delta0 * (1e-3 + (1.0 - 2e-3) * k / (M - 1));
        ds[static_cast<std::size_t>(k)] = d;
        ws[static_cast<std::size_t>(k)] = Wof(d);
        scan_max = std::max(scan_max, std::abs(ws[static_cast<std::size_t>(k)]));
      }
      if (scan_max == 0) continue;
      for (int k = 1; k + 1 < M; ++k) {
        const double am = std::abs(ws[static_cast<std::size_t>(k - 1)]);
        const double a0 = std::abs(ws[static_cast<std::size_t>(k)]);
        const double ap = std::abs(ws[static_cast<std::size_t>(k + 1)]);
        if (!(a0 <= am && a0 <= ap && a0 < 0.5 * scan_max)) continue;
        // secant refinement on the complex value over the real parameter
        double d0 = ds[static_cast<std::size_t>(k - 1)], d1 = ds[static_cast<std::size_t>(k)];
        cplx w0 = ws[static_cast<std::size_t>(k - 1)], w1 = ws[static_cast<std::size_t>(k)];
        for (int it = 0; it < 60 && std::abs(w1) > 0; ++it) {
          const cplx denom = w1 - w0;
          if (std::abs(denom) == 0) break;
          const cplx step = w1 * cplx(d1 - d0) / denom;
          double d2 = d1 - step.real();
          d2 = std::min(std::max(d2, delta0 * 1e-6), delta0 * (1.0 - 1e-6));
          if (std::abs(d2 - d1) < 1e-15) break;
          d0 = d1; w0 = w1; d1 = d2; w1 = Wof(d2);
        }
        if (std::abs(w1) > opt.zero_tol * scan_max) continue;  // shallow minimum, not a zero
        if (!out.empty()) {
          bool dup = false;
          for (const auto& s : out)
            dup |= (s.branch == b && s.segment == seg && std::abs(s.delta - d1) < 1e-7);
          if (dup) continue;
        }

        BoundState st;
        st.branch = b;
        st.segment = seg;
        st.delta = d1;
        st.decay_rate = d1;
        const QuasiMomentum q{cplx(seg, d1), b};
        const cplx lam = lambda_of_xi(q, rho0);
        if (std::abs(lam.imag()) > 1e-8)
          throw NumericalConsistencyError("bound state: eigenvalue left the unit circle");
        st.lambda = lam.real();
        st.eigenvalue = std::exp(iu * lam);

        // eigenvector: decayed Jost solution, + side right of the matching
        // point, - side left of it
        const int halfwidth = std::min(opt.max_halfwidth, static_cast<int>(35.0 / d1) + 2);
        Window wv = w.expanded(halfwidth);
        const auto raw = free_eigenpair_raw(q, coin.alpha0());
        const auto raw_mir = free_eigenpair_raw(q, mir.alpha0());
        const auto mp = detail::solve_m_plus(coin, q, raw.phi_plus, wv);
        const Window mwin{-wv.hi, -wv.lo};
        const auto mpm = detail::solve_m_plus(mir, q, raw_mir.phi_plus, mwin);
        auto mm_at = [&](int x) {
          const Spinor s = mpm[static_cast<std::size_t>(-x - mwin.lo)];
          return Spinor{s.down, s.up};
        };
        const int xm = w.contains(0) ? 0 : (w.lo + w.hi) / 2;
        const Spinor pl = mp[static_cast<std::size_t>(xm - wv.lo)], mi = mm_at(xm);
        const cplx kappa = std::abs(mi.up) >= std::abs(mi.down) ? pl.up / mi.up : pl.down / mi.down;
        SpinorField v(wv);
        for (int x = wv.lo; x <= wv.hi; ++x) {
          if (x >= xm)
            v[x] = std::exp(iu * q.xi * static_cast<double>(x)) * mp[static_cast<std::size_t>(x - wv.lo)];
          else
            v[x] = kappa * (std::exp(-iu * q.xi * static_cast<double>(x)) * mm_at(x));
        }
        SpinorField u = gauge.apply(edge_to_vertex(v), true);
        const double nrm = u.l2_norm();
        if (nrm == 0) continue;
        for (int x = u.window().lo; x <= u.window().hi; ++x) u[x] = (1.0 / nrm) * u[x];

        // residual of the eigenvalue equation on the original walk
        {
          WalkOperator op(input_coin, u.window().expanded(2));
          SpinorField uu(op.window());
          for (int x = u.window().lo; x <= u.window().hi; ++x) uu[x] = u[x];
          const SpinorField r = apply_U(op, uu);
          double n2 = 0;
          for (int x = op.window().lo; x <= op.window().hi; ++x)
            n2 += (r[x] - st.eigenvalue * uu[x]).norm_sq();
          st.eigen_residual = std::sqrt(n2);
        }
        st.eigenvector = std::move(u);
        out.push_back(std::move(st));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const BoundState& a, const BoundState& b) {
    return a.lambda < b.lambda;
  });
  return out;
}

/// Slow verification mode for the gap search: counts Wronskian zeros inside
/// the strip rectangle Im ξ ∈ [delta_lo, delta_hi] (full torus in Re ξ) for
/// one branch by the argument principle. The horizontal periodicity cancels
/// the vertical contour sides, leaving the phase winding of W along the two
/// horizontal lines.
inline int wronskian_zero_count(const CoinField& input_coin, Branch branch, double delta_lo,
                                double delta_hi, int grid_n = 1024) {
  auto [coin, gauge] = gauge_reduce(input_coin);
  const CoinField mir = mirror_coin(coin);
  Window w = coin.support().size() > 0 ? coin.support().expanded(4) : Window{-4, 4};
  if (!w.contains(0)) w = Window{std::min(w.lo, 0), std::max(w.hi, 0)};

  auto winding = [&](double d) {
    double acc = 0;
    cplx prev = detail::gap_wronskian(coin, mir, branch, cplx(0.0, d), w);
    for (int j = 1; j <= grid_n; ++j) {
      const double xi = 2.0 * std::numbers::pi * j / grid_n;
      const cplx cur = detail::gap_wronskian(coin, mir, branch, cplx(xi, d), w);
      acc += std::arg(cur / prev);
      prev = cur;
    }
    return acc / (2.0 * std::numbers::pi);
  };
  const double net = winding(delta_lo) - winding(delta_hi);
  return static_cast<int>(std::lround(net));
}

/// Perturbed resolvent kernel between edge sites from the Jost table:
/// (𝒞 - e^{iλ(ξ)})⁻¹(x, y).
inline Mat2 resolvent_kernel(const JostTable& t, int j, int x, int y) {
  const cplx W = wronskian(t, j);
  if (std::abs(W) < 1e-12) throw DomainError("resolvent kernel: at or near a Wronskian zero");
  const QuasiMomentum q = t.q(j);
  const cplx lambda = lambda_of_xi(q, t.coin.rho0());
  const cplx pre = std::exp(iu * q.xi * static_cast<double>(std::abs(x - y))) * std::exp(-iu * lambda) / W;
  const Mat2 K = pre * detail::kernel_combine(t.mp(j, x), t.mm(j, x), t.mp(j, y), t.mm(j, y), x, y);
  if (t.gauge.trivial()) return K;
  return t.gauge.edge_phase(x, true) * K * t.gauge.edge_phase(y, false);
}

/// Projection onto the continuous spectrum: identity minus the bound-state
/// eigenprojections (eigenvectors of a unitary are orthogonal and simple
/// here, so the rank-one sum is exact).
class ContinuousProjector {
 public:
  ContinuousProjector() = default;
  explicit ContinuousProjector(std::vector<BoundState> states) : states_(std::move(states)) {}

  const std::vector<BoundState>& states() const { return states_; }

  SpinorField apply(const SpinorField& u) const {
    Window w = u.window();
    for (const auto& s : states_) {
      const Window wv = s.eigenvector.window();
      w = Window{std::min(w.lo, wv.lo), std::max(w.hi, wv.hi)};
    }
    SpinorField out(w, u.convention());
    for (int x = u.window().lo; x <= u.window().hi; ++x) out[x] = u[x];
    for (const auto& s : states_) {
      const cplx c = inner(s.eigenvector, u);
      if (c == cplx{}) continue;
      const Window wv = s.eigenvector.window();
      for (int x = wv.lo; x <= wv.hi; ++x) out[x] -= c * s.eigenvector[x];
    }
    return out;
  }

 private:
  std::vector<BoundState> states_;
};

inline ContinuousProjector make_continuous_projector(const CoinField& coin,
                                                     const BoundStateOptions& opt = {}) {
  return ContinuousProjector(bound_states(coin, opt));
}

/// Riesz-contour route to P_c: trapezoid over the two curves λ(ξ ± shift)
/// using the perturbed resolvent kernel. delta_c must stay below every
/// bound state's decay rate so the point spectrum remains outside.
inline SpinorField continuous_projection_contour(const CoinField& coin, const SpinorField& u,
                                                 int nodes, double delta_c) {
  const SpinorField v = vertex_to_edge(u);
  const Window wv = v.window();
  SpinorField acc_edge(wv);
  for (Branch b : {Branch::Minus, Branch::Plus}) {
    const JostTable t = solve_jost(coin, b, nodes, delta_c, wv);
    const double rho0 = t.coin.rho0();
    for (int j = 0; j < nodes; ++j) {
      const QuasiMomentum q = t.q(j);
      const cplx lambda = lambda_of_xi(q, rho0);
      const cplx lp = rho0 * std::sin(q.xi) / std::sin(lambda);  // λ'(ξ)
      const cplx W = wronskian(t, j);
      for (int x = wv.lo; x <= wv.hi; ++x) {
        Spinor row{};
        for (int y = wv.lo; y <= wv.hi; ++y) {
          const Spinor vy = v[y];
          if (vy.up == cplx{} && vy.down == cplx{}) continue;
          const cplx pre = std::exp(iu * q.xi * static_cast<double>(std::abs(x - y))) / W;
          Mat2 K = pre * detail::kernel_combine(t.mp(j, x), t.mm(j, x), t.mp(j, y), t.mm(j, y), x, y);
          if (!t.gauge.trivial())
            K = t.gauge.edge_phase(x, true) * K * t.gauge.edge_phase(y, false);
          row += (lp / static_cast<double>(nodes)) * (K * vy);
        }
        acc_edge[x] += row;
      }
    }
  }
  SpinorField out = edge_to_vertex(acc_edge);
  SpinorField res(u.window());
  for (int x = u.window().lo; x <= u.window().hi; ++x) res[x] = out.at(x);
  return res;
}

}  // namespace qws
