#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qws/dense_oracle.hpp"
#include "qws/dispersive.hpp"

namespace qws {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a over a byte string; stable across platforms and runs.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Write-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// profile validation

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> failures;
  double norm_sigma0 = 0, norm_sigma1 = 0, norm_sigma2 = 0;
  bool generic_ready = false;      // l^{1,1} hypotheses plausible
  bool exceptional_ready = false;  // l^{1,2} hypotheses plausible
  std::optional<int> truncation_radius;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["ok"] = ok;
    j["failures"] = failures;
    j["perturbation_norm"] = {{"sigma0", norm_sigma0}, {"sigma1", norm_sigma1}, {"sigma2", norm_sigma2}};
    j["generic_ready"] = generic_ready;
    j["exceptional_ready"] = exceptional_ready;
    if (truncation_radius) j["truncation_radius"] = *truncation_radius;
    return j;
  }
};

namespace detail {

/// Log-log slope of the σ-weighted perturbation terms over the outer half of
/// the support; a slope ≥ -1 means the tail trend would not stay summable.
inline bool tail_summable(const CoinField& coin, int sigma) {
  const Window sup = coin.support();
  if (sup.size() <= 8) return true;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, p] : coin.entries()) {
    const double ax = std::abs(x);
    if (ax < std::max(4.0, 0.5 * std::max(std::abs(sup.lo), std::abs(sup.hi)))) continue;
    const double term =
        std::pow(bracket(x), sigma) * (std::abs(p.alpha - coin.alpha0()) + std::abs(wrap_angle(p.theta)));
    if (term > 0) pts.emplace_back(std::log(ax), std::log(term));
  }
  if (pts.size() < 6) return true;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope < -1.1;
}

}  // namespace detail

/// Check every standing assumption of the scattering pipeline and report
/// which spectral hypotheses (generic k = 1 / exceptional k = 2) the profile
/// supports.
inline ValidationReport validate_profile(const CoinField& coin) {
  ValidationReport rep;
  const double m0 = std::abs(coin.alpha0());
  if (!(m0 > 0.0 && m0 < 1.0)) {
    rep.ok = false;
    rep.failures.push_back("alpha0 must satisfy 0 < |alpha0| < 1");
  }
  for (const auto& [x, p] : coin.entries()) {
    if (std::abs(p.alpha) >= 1.0) {
      rep.ok = false;
      rep.failures.push_back("|alpha| >= 1 at x = " + std::to_string(x));
    }
    if (std::abs(std::norm(p.alpha) + std::norm(p.beta) - 1.0) > 1e-12) {
      rep.ok = false;
      rep.failures.push_back("(alpha, beta) not normalized at x = " + std::to_string(x));
    }
  }
  rep.norm_sigma0 = perturbation_norm(coin, 0);
  rep.norm_sigma1 = perturbation_norm(coin, 1);
  rep.norm_sigma2 = perturbation_norm(coin, 2);
  rep.generic_ready = rep.ok && detail::tail_summable(coin, 1);
  rep.exceptional_ready = rep.ok && detail::tail_summable(coin, 2);
  rep.truncation_radius = coin.truncation_radius;
  return rep;
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  std::string command;
  std::string profile_path;
  std::string out_path;
  std::string in_path;        // fit input
  std::string initial = "delta";
  std::string branch = "minus";  // minus | plus | both
  std::string route = "direct";  // direct | kernel | both
  double rho0 = 1.0 / std::numbers::sqrt2;
  int grid = 4096;
  double delta = 0.0;
  long t = 100;
  long tmax = 3000;
  int threads = 1;
  std::uint64_t seed = 1;
  std::string cache_dir = "qws-cache";
  std::string log_level = "info";

  nlohmann::json to_json() const {
    return {{"command", command}, {"profile", profile_path}, {"out", out_path},
            {"in", in_path},      {"initial", initial},      {"branch", branch},
            {"route", route},     {"rho0", rho0},            {"grid", grid},
            {"delta", delta},     {"t", t},                  {"tmax", tmax},
            {"threads", threads}, {"seed", seed}};
  }

  /// Hash of the fields that determine the computation (not where results
  /// land or how many workers ran it): equal hashes mean byte-identical
  /// output payloads.
  std::string hash() const {
    nlohmann::json j{{"command", command}, {"initial", initial}, {"branch", branch},
                     {"route", route},     {"rho0", rho0},       {"grid", grid},
                     {"delta", delta},     {"t", t},             {"tmax", tmax},
                     {"seed", seed}};
    if (!profile_path.empty()) {
      try {
        j["profile"] = coin_profile_json(load_coin_profile(read_file(profile_path)));
      } catch (const Error&) {
        j["profile"] = profile_path;
      }
    }
    return hex64(fnv1a(j.dump()));
  }

  void check() const {
    if (grid < 2 || (grid & (grid - 1)) != 0) throw ConfigError("grid must be a power of two");
    if (delta < 0) throw ConfigError("delta must be nonnegative");
    if (threads < 1) throw ConfigError("threads must be positive");
    if (t < 0 || tmax < 1) throw ConfigError("t must be nonnegative");
  }
};

// ---------------------------------------------------------------------------
// Jost-table cache (keyed by profile x branch x grid x delta x window)

namespace detail {

inline void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& s, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(s, bits);
}
inline std::uint64_t get_u64(const std::string& s, std::size_t& pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos++])) << (8 * i);
  return v;
}
inline double get_f64(const std::string& s, std::size_t& pos) {
  const std::uint64_t bits = get_u64(s, pos);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string serialize_table(const JostTable& t) {
  std::string s = "QWSJT001";
  put_u64(s, t.branch == Branch::Minus ? 0 : 1);
  put_u64(s, static_cast<std::uint64_t>(t.grid_n));
  put_f64(s, t.delta);
  put_u64(s, static_cast<std::uint64_t>(static_cast<std::int64_t>(t.window.lo)));
  put_u64(s, static_cast<std::uint64_t>(static_cast<std::int64_t>(t.window.hi)));
  auto put_spinors = [&](const std::vector<Spinor>& v) {
    put_u64(s, v.size());
    for (const auto& sp : v) {
      put_f64(s, sp.up.real());
      put_f64(s, sp.up.imag());
      put_f64(s, sp.down.real());
      put_f64(s, sp.down.imag());
    }
  };
  put_spinors(t.m_plus);
  put_spinors(t.m_minus);
  put_u64(s, t.residual.size());
  for (double r : t.residual) put_f64(s, r);
  return s;
}

inline bool deserialize_table(const std::string& s, JostTable& t) {
  if (s.size() < 8 || s.compare(0, 8, "QWSJT001") != 0) return false;
  std::size_t pos = 8;
  t.branch = get_u64(s, pos) == 0 ? Branch::Minus : Branch::Plus;
  t.grid_n = static_cast<int>(get_u64(s, pos));
  t.delta = get_f64(s, pos);
  t.window.lo = static_cast<int>(static_cast<std::int64_t>(get_u64(s, pos)));
  t.window.hi = static_cast<int>(static_cast<std::int64_t>(get_u64(s, pos)));
  t.xi_base = xi_grid(t.grid_n);
  auto get_spinors = [&](std::vector<Spinor>& v) {
    v.resize(get_u64(s, pos));
    for (auto& sp : v) {
      const double a = get_f64(s, pos), b = get_f64(s, pos);
      const double c = get_f64(s, pos), d = get_f64(s, pos);
      sp = {cplx(a, b), cplx(c, d)};
    }
  };
  get_spinors(t.m_plus);
  get_spinors(t.m_minus);
  t.residual.resize(get_u64(s, pos));
  for (auto& r : t.residual) r = get_f64(s, pos);
  return true;
}

}  // namespace detail

/// Compute a Jost table through the on-disk cache. A hit reproduces the
/// stored table byte-for-byte; a miss solves and stores.
inline JostTable cached_jost(const CoinField& coin, Branch branch, int grid_n, double delta,
                             Window window, const std::string& cache_dir, int threads,
                             bool* hit = nullptr) {
  const std::string profile = coin_profile_json(coin).dump();
  const std::string key =
      hex64(fnv1a(profile + "|" + (branch == Branch::Minus ? "minus" : "plus") + "|" +
                  std::to_string(grid_n) + "|" + format_double(delta) + "|" +
                  std::to_string(window.lo) + ":" + std::to_string(window.hi)));
  namespace fs = std::filesystem;
  const fs::path file = fs::path(cache_dir) / ("jost-" + key + ".bin");
  if (!cache_dir.empty() && fs::exists(file)) {
    JostTable t;
    if (detail::deserialize_table(read_file(file.string()), t)) {
      auto [red, gauge] = gauge_reduce(coin);
      t.coin = red;
      t.gauge = gauge;
      t.alpha0 = red.alpha0();
      if (hit) *hit = true;
      return t;
    }
  }
  JostTable t = solve_jost(coin, branch, grid_n, delta, window, threads);
  if (!cache_dir.empty()) write_file_atomic(file.string(), detail::serialize_table(t));
  if (hit) *hit = false;
  return t;
}

// ---------------------------------------------------------------------------
// command drivers

namespace detail {

inline std::string csv_meta(const RunConfig& cfg) {
  std::string s;
  s += "# qwscatter " + std::string(kVersion) + "\n";
  s += "# config " + cfg.hash() + "\n";
  s += "# seed " + std::to_string(cfg.seed) + "\n";
  return s;
}

inline SpinorField initial_state(const RunConfig& cfg) {
  if (cfg.initial == "delta") {
    SpinorField u(Window{0, 0});
    u[0] = {1.0, 0.0};
    return u;
  }
  return spinor_field_from_json(nlohmann::json::parse(read_file(cfg.initial)));
}

}  // namespace detail

inline CoinField load_profile_file(const std::string& path) {
  return load_coin_profile(read_file(path));
}

inline int run_validate(const RunConfig& cfg, std::string* out_text = nullptr) {
  ValidationReport rep;
  try {
    rep = validate_profile(load_profile_file(cfg.profile_path));
  } catch (const ValidationError& e) {
    rep.ok = false;
    rep.failures.push_back(e.what());
  }
  nlohmann::json j = rep.to_json();
  j["config"] = cfg.hash();
  j["version"] = kVersion;
  const std::string text = j.dump(2) + "\n";
  if (out_text) *out_text = text;
  if (!cfg.out_path.empty()) write_file_atomic(cfg.out_path, text);
  return rep.ok ? 0 : 2;
}

inline void run_simulate(const RunConfig& cfg) {
  const CoinField coin = load_profile_file(cfg.profile_path);
  SpinorField u0 = detail::initial_state(cfg);
  const Window sup = u0.support();
  Window w{std::min(sup.lo, coin.support().size() > 0 ? coin.support().lo : 0) - static_cast<int>(cfg.t) - 2,
           std::max(sup.hi, coin.support().size() > 0 ? coin.support().hi : 0) + static_cast<int>(cfg.t) + 2};
  WalkOperator op(coin, w);
  SpinorField s(w);
  for (int x = sup.lo; x <= sup.hi; ++x) s[x] = u0.at(x);
  s = apply_U_power(op, s, cfg.t);
  std::string csv = detail::csv_meta(cfg) + "x,up_re,up_im,down_re,down_im\n";
  const Window ss = s.support();
  for (int x = ss.lo; x <= ss.hi; ++x) {
    csv += std::to_string(x) + "," + format_double(s[x].up.real()) + "," +
           format_double(s[x].up.imag()) + "," + format_double(s[x].down.real()) + "," +
           format_double(s[x].down.imag()) + "\n";
  }
  write_file_atomic(cfg.out_path, csv);
}

inline void run_dispersion(const RunConfig& cfg) {
  const double rho0 = cfg.rho0;
  if (!(rho0 > 0 && rho0 < 1)) throw ConfigError("dispersion: rho0 must be in (0,1)");
  const double alpha0 = std::sqrt(1.0 - rho0 * rho0);
  std::string csv = detail::csv_meta(cfg) + "xi,lambda,dlambda,d2lambda,d3lambda,W0_re,W0_im\n";
  for (double xi : xi_grid(cfg.grid)) {
    const QuasiMomentum q{cplx(xi, 0.0), Branch::Minus};
    const cplx l = lambda_of_xi(q, rho0);
    const auto d = lambda_derivatives(xi, rho0);
    const cplx w0 = free_wronskian(q, cplx(alpha0, 0.0));
    csv += format_double(xi) + "," + format_double(l.real()) + "," + format_double(d.d1) + "," +
           format_double(d.d2) + "," + format_double(d.d3) + "," + format_double(w0.real()) + "," +
           format_double(w0.imag()) + "\n";
  }
  write_file_atomic(cfg.out_path, csv);
}

inline void run_jost(const RunConfig& cfg) {
  const CoinField coin = load_profile_file(cfg.profile_path);
  const Branch b = cfg.branch == "plus" ? Branch::Plus : Branch::Minus;
  Window w = coin.support().size() > 0 ? coin.support().expanded(8) : Window{-8, 8};
  if (!w.contains(0)) w = Window{std::min(w.lo, 0), std::max(w.hi, 0)};
  const JostTable t = cached_jost(coin, b, cfg.grid, cfg.delta, w, cfg.cache_dir, cfg.threads);
  std::string csv = detail::csv_meta(cfg) +
                    "xi,x,mp_up_re,mp_up_im,mp_dn_re,mp_dn_im,mm_up_re,mm_up_im,mm_dn_re,mm_dn_im,"
                    "residual\n";
  for (int j = 0; j < t.grid_n; ++j) {
    for (int x = w.lo; x <= w.hi; ++x) {
      const Spinor p = t.mp(j, x), m = t.mm(j, x);
      csv += format_double(t.xi_base[static_cast<std::size_t>(j)]) + "," + std::to_string(x) + "," +
             format_double(p.up.real()) + "," + format_double(p.up.imag()) + "," +
             format_double(p.down.real()) + "," + format_double(p.down.imag()) + "," +
             format_double(m.up.real()) + "," + format_double(m.up.imag()) + "," +
             format_double(m.down.real()) + "," + format_double(m.down.imag()) + "," +
             format_double(t.residual[static_cast<std::size_t>(j)]) + "\n";
    }
  }
  write_file_atomic(cfg.out_path, csv);
}

inline void run_scattering(const RunConfig& cfg) {
  const CoinField coin = load_profile_file(cfg.profile_path);
  std::vector<Branch> branches;
  if (cfg.branch == "minus")
    branches = {Branch::Minus};
  else if (cfg.branch == "plus")
    branches = {Branch::Plus};
  else
    branches = {Branch::Minus, Branch::Plus};

  Window w = coin.support().size() > 0 ? coin.support().expanded(8) : Window{-8, 8};
  if (!w.contains(0)) w = Window{std::min(w.lo, 0), std::max(w.hi, 0)};

  nlohmann::json jrep;
  jrep["version"] = kVersion;
  jrep["config"] = cfg.hash();
  jrep["seed"] = cfg.seed;
  std::string csv = detail::csv_meta(cfg) +
                    "branch,xi,W_re,W_im,t_re,t_im,rp_re,rp_im,rm_re,rm_im,unitarity_defect\n";

  for (Branch b : branches) {
    const std::string bname = b == Branch::Minus ? "minus" : "plus";
    const JostTable table = cached_jost(coin, b, cfg.grid, 0.0, w, cfg.cache_dir, cfg.threads);
    const ScatteringReport rep = scattering_coefficients(table);
    nlohmann::json jb;
    jb["unitarity_defect"] = rep.unitarity_defect;
    jb["t_consistency"] = rep.t_consistency;
    jb["min_offcorner_absW"] = rep.min_offcorner_absW;
    jb["edge_tol"] = rep.edge_tol;
    jrep["branches"][bname] = jb;
    for (int j = 0; j < rep.grid_n; ++j) {
      const double u = std::abs(std::norm(rep.t[static_cast<std::size_t>(j)]) +
                                std::norm(rep.r_plus[static_cast<std::size_t>(j)]) - 1.0);
      csv += bname + "," + format_double(rep.xi[static_cast<std::size_t>(j)]) + "," +
             format_double(rep.W[static_cast<std::size_t>(j)].real()) + "," +
             format_double(rep.W[static_cast<std::size_t>(j)].imag()) + "," +
             format_double(rep.t[static_cast<std::size_t>(j)].real()) + "," +
             format_double(rep.t[static_cast<std::size_t>(j)].imag()) + "," +
             format_double(rep.r_plus[static_cast<std::size_t>(j)].real()) + "," +
             format_double(rep.r_plus[static_cast<std::size_t>(j)].imag()) + "," +
             format_double(rep.r_minus[static_cast<std::size_t>(j)].real()) + "," +
             format_double(rep.r_minus[static_cast<std::size_t>(j)].imag()) + "," + format_double(u) +
             "\n";
    }
  }

  for (const auto& e : resonance_classify(coin)) {
    nlohmann::json je;
    je["branch"] = e.branch == Branch::Minus ? "minus" : "plus";
    je["xi"] = e.xi0;
    je["abs_W"] = e.abs_W;
    je["tol"] = e.tol;
    je["kind"] = e.kind == EdgeClassification::Kind::Generic
                     ? "generic"
                     : (e.kind == EdgeClassification::Kind::Exceptional ? "exceptional" : "indeterminate");
    jrep["resonance"].push_back(je);
  }
  for (const auto& s : bound_states(coin)) {
    nlohmann::json js;
    js["branch"] = s.branch == Branch::Minus ? "minus" : "plus";
    js["segment"] = s.segment;
    js["delta"] = s.delta;
    js["lambda"] = s.lambda;
    js["eigenvalue_re"] = s.eigenvalue.real();
    js["eigenvalue_im"] = s.eigenvalue.imag();
    js["decay_rate"] = s.decay_rate;
    js["eigen_residual"] = s.eigen_residual;
    jrep["bound_states"].push_back(js);
  }
  if (!jrep.contains("bound_states")) jrep["bound_states"] = nlohmann::json::array();

  write_file_atomic(cfg.out_path + ".csv", csv);
  write_file_atomic(cfg.out_path + ".json", jrep.dump(2) + "\n");
}

inline void run_dispersive(const RunConfig& cfg) {
  const CoinField coin = load_profile_file(cfg.profile_path);
  DecayExperiment exp{coin, detail::initial_state(cfg), {}, DecayRoute::DirectEvolution, cfg.grid, 8};
  for (long tt : default_decay_schedule())
    if (tt <= cfg.tmax) exp.t_schedule.push_back(tt);
  if (exp.t_schedule.empty()) exp.t_schedule.push_back(cfg.tmax);
  if (cfg.route == "kernel")
    exp.route = DecayRoute::KernelQuadrature;
  else if (cfg.route == "both")
    exp.route = DecayRoute::Both;
  const auto rows = run_decay(exp);
  std::string csv = detail::csv_meta(cfg) + "t,supnorm,l2norm,ratio,route\n";
  for (const auto& r : rows)
    csv += std::to_string(r.t) + "," + format_double(r.supnorm) + "," + format_double(r.l2norm) +
           "," + format_double(r.ratio) + "," + r.route + "\n";
  write_file_atomic(cfg.out_path, csv);
}

inline void run_fit(const RunConfig& cfg, std::string* out_text = nullptr) {
  std::istringstream in(read_file(cfg.in_path));
  std::string line;
  std::vector<std::pair<double, double>> series;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    double t = 0, v = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &t, &v) == 2) series.emplace_back(t, v);
  }
  const DecayFit fit = fit_decay(series);
  nlohmann::json j{{"exponent", fit.exponent}, {"stderr", fit.stderr_}, {"n_points", fit.n_points}};
  j["config"] = cfg.hash();
  j["version"] = kVersion;
  const std::string text = j.dump(2) + "\n";
  if (out_text) *out_text = text;
  if (!cfg.out_path.empty()) write_file_atomic(cfg.out_path, text);
}

/// Dispatch one configured command; returns the process exit code.
inline int orchestrate(const RunConfig& cfg, std::string* out_text = nullptr) {
  cfg.check();
  if (cfg.command == "validate") return run_validate(cfg, out_text);
  if (cfg.command == "simulate") {
    run_simulate(cfg);
    return 0;
  }
  if (cfg.command == "dispersion") {
    run_dispersion(cfg);
    return 0;
  }
  if (cfg.command == "jost") {
    run_jost(cfg);
    return 0;
  }
  if (cfg.command == "scattering") {
    run_scattering(cfg);
    return 0;
  }
  if (cfg.command == "dispersive") {
    run_dispersive(cfg);
    return 0;
  }
  if (cfg.command == "fit") {
    run_fit(cfg, out_text);
    return 0;
  }
  throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace qws
