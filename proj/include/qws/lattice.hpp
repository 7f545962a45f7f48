#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "qws/errors.hpp"

namespace qws {

using cplx = std::complex<double>;

inline constexpr cplx iu{0.0, 1.0};

/// ⟨x⟩ = sqrt(1 + x²).
inline double bracket(std::int64_t x) {
  return std::sqrt(1.0 + static_cast<double>(x) * static_cast<double>(x));
}

/// One lattice site's internal state.
struct Spinor {
  cplx up{};
  cplx down{};

  double norm_sq() const { return std::norm(up) + std::norm(down); }
  double norm() const { return std::sqrt(norm_sq()); }

  Spinor& operator+=(const Spinor& o) {
    up += o.up;
    down += o.down;
    return *this;
  }
  Spinor& operator-=(const Spinor& o) {
    up -= o.up;
    down -= o.down;
    return *this;
  }
  friend Spinor operator+(Spinor a, const Spinor& b) { return a += b; }
  friend Spinor operator-(Spinor a, const Spinor& b) { return a -= b; }
  friend Spinor operator*(const cplx& c, const Spinor& s) { return {c * s.up, c * s.down}; }
};

inline cplx inner(const Spinor& a, const Spinor& b) {
  return std::conj(a.up) * b.up + std::conj(a.down) * b.down;
}

/// Closed integer interval [lo, hi].
struct Window {
  int lo = 0;
  int hi = -1;

  int size() const { return hi >= lo ? hi - lo + 1 : 0; }
  bool contains(int x) const { return x >= lo && x <= hi; }
  bool contains(const Window& w) const { return w.size() == 0 || (lo <= w.lo && w.hi <= hi); }
  Window expanded(int m) const { return {lo - m, hi + m}; }
  bool operator==(const Window&) const = default;
};

enum class OutsideConvention { Zero, FreeExtension };

/// ℂ²-valued state on an explicit window. Reads outside the window return
/// the zero spinor; FreeExtension is a tag for evolution drivers only.
class SpinorField {
 public:
  SpinorField() = default;
  explicit SpinorField(Window w, OutsideConvention conv = OutsideConvention::Zero)
      : window_(w), conv_(conv), values_(static_cast<std::size_t>(w.size())) {}

  const Window& window() const { return window_; }
  OutsideConvention convention() const { return conv_; }

  Spinor at(int x) const {
    if (!window_.contains(x)) return Spinor{};
    return values_[static_cast<std::size_t>(x - window_.lo)];
  }
  void set(int x, const Spinor& s) {
    if (!window_.contains(x)) throw WindowOverflowError("SpinorField::set: site outside window");
    values_[static_cast<std::size_t>(x - window_.lo)] = s;
  }
  Spinor& operator[](int x) { return values_[static_cast<std::size_t>(x - window_.lo)]; }
  const Spinor& operator[](int x) const { return values_[static_cast<std::size_t>(x - window_.lo)]; }

  /// Smallest window containing all entries above `tol` in norm; empty if none.
  Window support(double tol = 0.0) const {
    int lo = window_.hi + 1, hi = window_.lo - 1;
    for (int x = window_.lo; x <= window_.hi; ++x) {
      if ((*this)[x].norm() > tol) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    return lo <= hi ? Window{lo, hi} : Window{0, -1};
  }

  double l2_norm() const {
    double s = 0;
    for (const auto& v : values_) s += v.norm_sq();
    return std::sqrt(s);
  }
  double l1_norm() const {
    double s = 0;
    for (const auto& v : values_) s += v.norm();
    return s;
  }
  double sup_norm() const {
    double s = 0;
    for (const auto& v : values_) s = std::max(s, v.norm());
    return s;
  }

  friend cplx inner(const SpinorField& a, const SpinorField& b) {
    Window w{std::min(a.window_.lo, b.window_.lo), std::max(a.window_.hi, b.window_.hi)};
    cplx s = 0;
    for (int x = w.lo; x <= w.hi; ++x) s += inner(a.at(x), b.at(x));
    return s;
  }

 private:
  Window window_{};
  OutsideConvention conv_ = OutsideConvention::Zero;
  std::vector<Spinor> values_;
};

/// Weighted sequence-norm request: exponent p and weight power sigma.
struct NormSpec {
  static constexpr int inf = std::numeric_limits<int>::max();
  int p = 2;
  int sigma = 0;
};

/// ‖u‖ = (Σ_x ⟨x⟩^{pσ} ‖u(x)‖^p)^{1/p}, sup-norm when p = ∞.
/// Supported: p ∈ {1, 2, ∞}, σ ∈ {0, 1, 2}.
inline double weighted_norm(const SpinorField& u, const NormSpec& spec) {
  const bool p_ok = spec.p == 1 || spec.p == 2 || spec.p == NormSpec::inf;
  const bool s_ok = spec.sigma >= 0 && spec.sigma <= 2;
  if (!p_ok || !s_ok) throw ConfigError("weighted_norm: unsupported (p, sigma) combination");
  const Window w = u.window();
  if (spec.p == NormSpec::inf) {
    double m = 0;
    for (int x = w.lo; x <= w.hi; ++x) m = std::max(m, std::pow(bracket(x), spec.sigma) * u[x].norm());
    return m;
  }
  double acc = 0;
  for (int x = w.lo; x <= w.hi; ++x) {
    const double wx = std::pow(bracket(x), spec.p * spec.sigma);
    acc += wx * (spec.p == 1 ? u[x].norm() : u[x].norm_sq());
  }
  return spec.p == 1 ? acc : std::sqrt(acc);
}

inline nlohmann::json to_json(const SpinorField& u) {
  nlohmann::json arr = nlohmann::json::array();
  const Window w = u.window();
  for (int x = w.lo; x <= w.hi; ++x) {
    arr.push_back({{"x", x},
                   {"up_re", u[x].up.real()},
                   {"up_im", u[x].up.imag()},
                   {"down_re", u[x].down.real()},
                   {"down_im", u[x].down.imag()}});
  }
  return arr;
}

inline SpinorField spinor_field_from_json(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.empty()) throw ValidationError("spinor field document must be a nonempty array");
  int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
  for (const auto& e : arr) {
    const int x = e.at("x").get<int>();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  SpinorField u(Window{lo, hi});
  for (const auto& e : arr) {
    u.set(e.at("x").get<int>(),
          Spinor{cplx(e.at("up_re").get<double>(), e.at("up_im").get<double>()),
                 cplx(e.at("down_re").get<double>(), e.at("down_im").get<double>())});
  }
  return u;
}

}  // namespace qws
