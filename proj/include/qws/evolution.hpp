#pragma once

#include <array>
#include <vector>

#include "qws/coin.hpp"
#include "qws/mat2.hpp"

namespace qws {

/// One step of the walk U = S Ĉ on a fixed finite window. Coin matrices are
/// cached per site; the window must contain the coin support with margin ≥ 1.
class WalkOperator {
 public:
  WalkOperator(CoinField coin, Window window) : coin_(std::move(coin)), window_(window) {
    const Window sup = coin_.support();
    if (sup.size() > 0 && !(window_.lo <= sup.lo - 1 && sup.hi + 1 <= window_.hi))
      throw ConfigError("walk operator: window must contain the coin support with margin >= 1");
    if (window_.size() < 3) throw ConfigError("walk operator: window too small");
    cache_.reserve(static_cast<std::size_t>(window_.size()));
    for (int x = window_.lo; x <= window_.hi; ++x) cache_.push_back(coin_matrix(coin_.at(x)));
  }

  const CoinField& coin() const { return coin_; }
  const Window& window() const { return window_; }

  const Mat2& coin_at(int x) const {
    // periodic continuation only matters for the dense oracle; plain
    // evolution never reads outside the window
    return cache_[static_cast<std::size_t>(x - window_.lo)];
  }

 private:
  CoinField coin_;
  Window window_;
  std::vector<Mat2> cache_;
};

/// U u = S(Ĉ u). Enlarges the support by at most one site per side; amplitude
/// reaching the window boundary raises WindowOverflowError.
inline SpinorField apply_U(const WalkOperator& op, const SpinorField& u) {
  const Window w = op.window();
  const Window sup = u.support();
  if (sup.size() > 0 && (sup.lo - 1 < w.lo || sup.hi + 1 > w.hi))
    throw WindowOverflowError("apply_U: support would exit the window");
  SpinorField out(w, u.convention());
  for (int x = w.lo; x <= w.hi; ++x) {
    Spinor r{};
    if (x - 1 >= w.lo) {
      const Mat2& c = op.coin_at(x - 1);
      const Spinor v = u.at(x - 1);
      r.up = c.a * v.up + c.b * v.down;
    }
    if (x + 1 <= w.hi) {
      const Mat2& c = op.coin_at(x + 1);
      const Spinor v = u.at(x + 1);
      r.down = c.c * v.up + c.d * v.down;
    }
    out[x] = r;
  }
  return out;
}

/// U^t by repeated application.
inline SpinorField apply_U_power(const WalkOperator& op, const SpinorField& u, long t) {
  if (t < 0) throw ConfigError("apply_U_power: t must be nonnegative");
  const Window sup = u.support();
  if (sup.size() > 0 &&
      (sup.lo - t < op.window().lo || sup.hi + t > op.window().hi))
    throw WindowOverflowError("apply_U_power: light cone exits the window");
  if (t == 0) {
    SpinorField out(op.window(), u.convention());
    for (int x = op.window().lo; x <= op.window().hi; ++x) out[x] = u.at(x);
    return out;
  }
  SpinorField cur = apply_U(op, u);
  for (long s = 1; s < t; ++s) cur = apply_U(op, cur);
  return cur;
}

/// Vertex-to-edge shift of view: v(x) = (u_↓(x-1), u_↑(x)).
inline SpinorField vertex_to_edge(const SpinorField& u) {
  const Window w = u.window();
  SpinorField v(Window{w.lo, w.hi + 1}, u.convention());
  for (int x = w.lo; x <= w.hi + 1; ++x) v[x] = {u.at(x - 1).down, u.at(x).up};
  return v;
}

/// Inverse of vertex_to_edge: u_↑(x) = v_↓(x), u_↓(x) = v_↑(x+1).
inline SpinorField edge_to_vertex(const SpinorField& v) {
  const Window w = v.window();
  SpinorField u(Window{w.lo - 1, w.hi}, v.convention());
  for (int x = w.lo - 1; x <= w.hi; ++x) u[x] = {v.at(x).down, v.at(x + 1).up};
  return u;
}

/// Five-diagonal (block-tridiagonal) form of J_VE U J_EV.
class CmvBand {
 public:
  explicit CmvBand(CoinField coin) : coin_(std::move(coin)) {}

  const CoinField& coin() const { return coin_; }

  Mat2 block_left(int x) const {  // multiplies v(x-1)
    const CoinPoint& p = coin_.at(x - 1);
    return {0, 0, 0, std::polar(1.0, p.theta) * p.beta};
  }
  Mat2 block_diag(int x) const {  // multiplies v(x)
    const CoinPoint& p = coin_.at(x);
    const CoinPoint& q = coin_.at(x - 1);
    return {0, -std::polar(1.0, p.theta) * p.alpha,
            std::polar(1.0, q.theta) * std::conj(q.alpha), 0};
  }
  Mat2 block_right(int x) const {  // multiplies v(x+1)
    const CoinPoint& p = coin_.at(x);
    return {std::polar(1.0, p.theta) * std::conj(p.beta), 0, 0, 0};
  }

  Spinor apply_at(const SpinorField& v, int x) const {
    return block_left(x) * v.at(x - 1) + block_diag(x) * v.at(x) + block_right(x) * v.at(x + 1);
  }
 private:
  CoinField coin_;
};

inline CmvBand cmv_band(const WalkOperator& op) { return CmvBand(op.coin()); }

inline SpinorField cmv_apply(const CmvBand& band, const SpinorField& v) {
  const Window w = v.window().expanded(1);
  SpinorField out(w, v.convention());
  for (int x = w.lo; x <= w.hi; ++x) out[x] = band.apply_at(v, x);
  return out;
}

/// Half-line cutoff: keeps everything to the right of x0 plus the down
/// component at x0 itself. Orthogonal projection.
inline SpinorField chi_plus(const SpinorField& u, int x0) {
  SpinorField out(u.window(), u.convention());
  for (int x = u.window().lo; x <= u.window().hi; ++x) {
    if (x > x0)
      out[x] = u[x];
    else if (x == x0)
      out[x] = {0.0, u[x].down};
  }
  return out;
}

/// Max over the delta basis of ‖[U, χ_{x0,+}] e‖₂. Vanishes exactly when the
/// coin at x0 has β = 0 (the walk decouples at x0).
inline double decoupling_check(const WalkOperator& op, int x0) {
  const Window w = op.window();
  double worst = 0;
  for (int x = w.lo + 1; x <= w.hi - 1; ++x) {
    for (int comp = 0; comp < 2; ++comp) {
      SpinorField e(w);
      e[x] = comp == 0 ? Spinor{1.0, 0.0} : Spinor{0.0, 1.0};
      const SpinorField a = apply_U(op, chi_plus(e, x0));
      const SpinorField b = chi_plus(apply_U(op, e), x0);
      double n2 = 0;
      for (int y = w.lo; y <= w.hi; ++y) n2 += (a[y] - b[y]).norm_sq();
      worst = std::max(worst, std::sqrt(n2));
    }
  }
  return worst;
}

}  // namespace qws
