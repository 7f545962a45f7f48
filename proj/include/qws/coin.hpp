#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <json.hpp>

#include "qws/mat2.hpp"

namespace qws {

/// Wrap an angle to the representative in (-π, π].
inline double wrap_angle(double t) {
  const double tau = 2.0 * std::numbers::pi;
  t = std::fmod(t, tau);
  if (t > std::numbers::pi) t -= tau;
  if (t <= -std::numbers::pi) t += tau;
  return t;
}

/// Parameters (α, β, θ) of one site's coin, |α|² + |β|² = 1.
struct CoinPoint {
  cplx alpha{};
  cplx beta{1.0};
  double theta = 0.0;

  CoinPoint() = default;

  /// Validating constructor; β defaults to the real positive root.
  CoinPoint(cplx a, std::optional<cplx> b, double th) : alpha(a), theta(th) {
    if (std::abs(alpha) >= 1.0)
      throw ValidationError("coin: |alpha| must be < 1");
    beta = b ? *b : cplx(std::sqrt(1.0 - std::norm(alpha)), 0.0);
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12)
      throw ValidationError("coin: (alpha, beta) not normalized");
  }

  /// Bypasses validation; used to build decoupled walks with β = 0.
  static CoinPoint unchecked(cplx a, cplx b, double th) {
    CoinPoint p;
    p.alpha = a;
    p.beta = b;
    p.theta = th;
    return p;
  }

  double rho() const { return std::sqrt(std::max(0.0, 1.0 - std::norm(alpha))); }
  bool reduced() const { return beta.imag() == 0.0 && beta.real() >= 0.0; }
};

/// The unitary e^{iθ} [[β, ᾱ], [-α, β̄]].
inline Mat2 coin_matrix(const CoinPoint& p) {
  if (std::abs(std::norm(p.alpha) + std::norm(p.beta) - 1.0) > 1e-12)
    throw ValidationError("coin_matrix: (alpha, beta) not normalized");
  const cplx ph = std::polar(1.0, p.theta);
  return {ph * p.beta, ph * std::conj(p.alpha), -ph * p.alpha, ph * std::conj(p.beta)};
}

/// Position-dependent coin: explicit entries on a finite support, the
/// asymptotic coin C_{α₀, ρ₀, 0} everywhere else.
class CoinField {
 public:
  CoinField() : CoinField(cplx(1.0 / std::numbers::sqrt2, 0.0)) {}

  explicit CoinField(cplx alpha0) : alpha0_(alpha0) {
    const double m = std::abs(alpha0_);
    if (m < 1e-9 || m > 1.0 - 1e-9)
      throw ValidationError("coin field: alpha0 must satisfy 0 < |alpha0| < 1");
    free_ = CoinPoint(alpha0_, std::nullopt, 0.0);
  }

  cplx alpha0() const { return alpha0_; }
  double rho0() const { return free_.rho(); }
  const CoinPoint& free_point() const { return free_; }

  void set_entry(int x, const CoinPoint& p) { entries_[x] = p; }
  void set_entry_unchecked(int x, cplx alpha, cplx beta, double theta) {
    entries_[x] = CoinPoint::unchecked(alpha, beta, theta);
  }

  const std::map<int, CoinPoint>& entries() const { return entries_; }

  const CoinPoint& at(int x) const {
    const auto it = entries_.find(x);
    return it == entries_.end() ? free_ : it->second;
  }
  double rho(int x) const { return at(x).rho(); }

  Window support() const {
    if (entries_.empty()) return {0, -1};
    return {entries_.begin()->first, entries_.rbegin()->first};
  }

  bool reduced() const {
    for (const auto& [x, p] : entries_)
      if (!p.reduced()) return false;
    return true;
  }

  std::optional<int> truncation_radius;

 private:
  cplx alpha0_;
  CoinPoint free_;
  std::map<int, CoinPoint> entries_;
};

/// Σ_x ⟨x⟩^σ (|α(x) - α₀| + |θ(x)|) over the support.
inline double perturbation_norm(const CoinField& field, int sigma) {
  if (sigma < 0 || sigma > 2) throw ConfigError("perturbation_norm: sigma must be in {0,1,2}");
  double s = 0;
  for (const auto& [x, p] : field.entries())
    s += std::pow(bracket(x), sigma) * (std::abs(p.alpha - field.alpha0()) + std::abs(wrap_angle(p.theta)));
  return s;
}

/// Diagonal phase field making every β real nonnegative. The accumulator B
/// is constant outside [lo, hi).
class GaugePhase {
 public:
  GaugePhase() = default;
  GaugePhase(int lo, std::vector<double> accum) : lo_(lo), B_(std::move(accum)) {}

  double B(int x) const {
    if (B_.empty()) return 0.0;
    if (x <= lo_) return B_.front();
    const auto i = static_cast<std::size_t>(x - lo_);
    return i < B_.size() ? B_[i] : B_.back();
  }
  double g_up(int x) const { return -B(x); }
  double g_down(int x) const { return -B(x + 1); }

  bool trivial() const {
    for (double b : B_)
      if (b != 0.0) return false;
    return true;
  }

  /// (Gu)(x) = (e^{i g_↑(x)} u_↑(x), e^{i g_↓(x)} u_↓(x)).
  SpinorField apply(const SpinorField& u, bool inverse = false) const {
    SpinorField out(u.window(), u.convention());
    const double s = inverse ? -1.0 : 1.0;
    for (int x = u.window().lo; x <= u.window().hi; ++x) {
      out[x] = {std::polar(1.0, s * g_up(x)) * u[x].up,
                std::polar(1.0, s * g_down(x)) * u[x].down};
    }
    return out;
  }

  /// Diagonal phase the gauge induces on edge-space fields.
  Mat2 edge_phase(int x, bool inverse = false) const {
    const double s = inverse ? -1.0 : 1.0;
    return {std::polar(1.0, s * g_down(x - 1)), 0, 0, std::polar(1.0, s * g_up(x))};
  }

 private:
  int lo_ = 0;
  std::vector<double> B_;
};

/// Rotates every β(x) to |β(x)| ≥ 0 through a gauge conjugation and returns
/// the reduced field together with the phases: U = G⁻¹ S Ĉ_reduced G.
inline std::pair<CoinField, GaugePhase> gauge_reduce(const CoinField& field) {
  CoinField out(field.alpha0());
  out.truncation_radius = field.truncation_radius;
  const Window sup = field.support();

  // b(x) = arg β(x) in [0, 2π); zero off the support.
  auto b = [&](int x) {
    const cplx beta = field.at(x).beta;
    double a = std::arg(beta);
    if (a < 0) a += 2.0 * std::numbers::pi;
    return a;
  };

  for (const auto& [x, p] : field.entries()) {
    CoinPoint q = p;
    q.beta = cplx(std::abs(p.beta), 0.0);
    out.set_entry(x, q);
  }
  if (sup.size() == 0) return {out, GaugePhase{}};

  // Cumulative sums: B(0) = 0, B(x+1) - B(x) = b(x).
  const int lo = std::min(sup.lo, 0) - 1;
  const int hi = std::max(sup.hi, 0) + 2;
  std::vector<double> B(static_cast<std::size_t>(hi - lo + 1), 0.0);
  auto at = [&](int x) -> double& { return B[static_cast<std::size_t>(x - lo)]; };
  for (int x = 0; x < hi; ++x) at(x + 1) = at(x) + b(x);
  for (int x = 0; x > lo; --x) at(x - 1) = at(x) - b(x - 1);
  return {out, GaugePhase(lo, std::move(B))};
}

namespace detail {

inline cplx read_complex(const nlohmann::json& j, const char* what) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im"))
    throw ValidationError(std::string("profile: ") + what + " must be {re, im}");
  return {j.at("re").get<double>(), j.at("im").get<double>()};
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Parse a coin-profile document:
///   {"alpha0": {re, im}, "preset": "...", "preset_params": {...},
///    "entries": [{"x", "alpha": {re, im}, "theta", "beta": {re, im}?}]}
/// Presets expand to explicit entries; explicit entries win on collision.
inline CoinField load_coin_profile(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("alpha0"))
    throw ValidationError("profile: missing alpha0");
  CoinField field(detail::read_complex(doc.at("alpha0"), "alpha0"));
  const cplx a0 = field.alpha0();

  auto shrink = [&](double strength) {
    return a0 * (1.0 - strength / std::abs(a0));
  };

  if (doc.contains("preset")) {
    const std::string preset = doc.at("preset").get<std::string>();
    const nlohmann::json params = doc.value("preset_params", nlohmann::json::object());
    if (preset == "free") {
      // nothing to add
    } else if (preset == "single-defect") {
      const double s = params.value("strength", 0.3);
      const int x0 = params.value("site", 0);
      const double th = params.value("theta", 0.0);
      if (s <= 0) throw ValidationError("profile: single-defect strength must be positive");
      const cplx a = shrink(s);
      if (std::abs(a) >= 1.0) throw ValidationError("profile: single-defect strength leaves |alpha| >= 1");
      field.set_entry(x0, CoinPoint(a, std::nullopt, th));
    } else if (preset == "barrier") {
      const double s = params.value("strength", 0.2);
      const int hw = params.value("half_width", 2);
      const cplx a = shrink(s);
      if (std::abs(a) >= 1.0) throw ValidationError("profile: barrier strength leaves |alpha| >= 1");
      for (int x = -hw; x <= hw; ++x) field.set_entry(x, CoinPoint(a, std::nullopt, 0.0));
    } else if (preset == "random-decay") {
      const double amp = params.value("amplitude", 0.1);
      const double rate = params.value("rate", 0.5);
      const double tamp = params.value("theta_amplitude", amp / 2);
      const auto seed = params.value("seed", static_cast<std::uint64_t>(1));
      // Truncate where the discarded l^{1,2} tail mass drops below 1e-10.
      int radius = 1;
      auto tail = [&](int r) {
        double t = 0;
        for (int x = r + 1; x < r + 4000; ++x) {
          const double term = 2.0 * (1.0 + double(x) * double(x)) * (amp + tamp) * std::exp(-rate * x);
          t += term;
          if (term < 1e-18) break;
        }
        return t;
      };
      while (tail(radius) >= 1e-10 && radius < 4000) ++radius;
      std::mt19937_64 rng(seed);
      for (int x = -radius; x <= radius; ++x) {
        const double env = std::exp(-rate * std::abs(x));
        const double da = amp * env * (0.5 + 0.5 * detail::uniform01(rng));
        const double th = tamp * env * (2.0 * detail::uniform01(rng) - 1.0);
        const cplx a = shrink(da);
        field.set_entry(x, CoinPoint(a, std::nullopt, th));
      }
      field.truncation_radius = radius;
    } else {
      throw ValidationError("profile: unknown preset '" + preset + "'");
    }
  }

  for (const auto& e : doc.value("entries", nlohmann::json::array())) {
    if (!e.contains("x")) throw ValidationError("profile: entry missing x");
    const int x = e.at("x").get<int>();
    const cplx a = detail::read_complex(e.at("alpha"), "entry alpha");
    if (std::abs(a) >= 1.0)
      throw ValidationError("profile: |alpha| >= 1 at x = " + std::to_string(x));
    std::optional<cplx> beta;
    if (e.contains("beta")) beta = detail::read_complex(e.at("beta"), "entry beta");
    const double th = e.value("theta", 0.0);
    try {
      field.set_entry(x, CoinPoint(a, beta, th));
    } catch (const ValidationError& err) {
      throw ValidationError(std::string(err.what()) + " at x = " + std::to_string(x));
    }
  }
  return field;
}

inline CoinField load_coin_profile(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("profile: invalid JSON: ") + e.what());
  }
  return load_coin_profile(doc);
}

inline CoinField load_coin_profile(const char* text) {
  return load_coin_profile(std::string(text));
}

/// Canonical JSON form of a coin field (used for hashing and reports).
inline nlohmann::json coin_profile_json(const CoinField& field) {
  nlohmann::json doc;
  doc["alpha0"] = {{"re", field.alpha0().real()}, {"im", field.alpha0().imag()}};
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [x, p] : field.entries()) {
    entries.push_back({{"x", x},
                       {"alpha", {{"re", p.alpha.real()}, {"im", p.alpha.imag()}}},
                       {"beta", {{"re", p.beta.real()}, {"im", p.beta.imag()}}},
                       {"theta", p.theta}});
  }
  doc["entries"] = entries;
  return doc;
}

}  // namespace qws
