#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "qws/evolution.hpp"

namespace qws {

/// Brute-force dense realization of the walk on a window with periodic
/// closure (the free coin sits on the seam, so wrapping never introduces a
/// defect). Column-major storage, basis (site, component) interleaved.
class DenseWalk {
 public:
  DenseWalk(const CoinField& coin, Window window) : window_(window), n_(window.size()) {
    if (n_ < 4) throw ConfigError("dense walk: window too small");
    if (n_ > 8192) throw ConfigError("dense walk: window exceeds the memory guard");
    const Window sup = coin.support();
    if (sup.size() > 0 && !(window_.lo <= sup.lo - 1 && sup.hi + 1 <= window_.hi))
      throw ConfigError("dense walk: window must contain the coin support");
    const std::size_t dim = 2u * static_cast<std::size_t>(n_);
    mat_.assign(dim * dim, cplx{});
    coin_cache_.reserve(static_cast<std::size_t>(n_));
    for (int s = 0; s < n_; ++s) {
      const Mat2 c = coin_matrix(coin.at(window_.lo + s));
      coin_cache_.push_back(c);
      const int up_row = 2 * ((s + 1) % n_);        // shift right
      const int dn_row = 2 * ((s - 1 + n_) % n_) + 1;  // shift left
      at(up_row, 2 * s) = c.a;
      at(up_row, 2 * s + 1) = c.b;
      at(dn_row, 2 * s) = c.c;
      at(dn_row, 2 * s + 1) = c.d;
    }
  }

  const Window& window() const { return window_; }
  int sites() const { return n_; }
  std::size_t dim() const { return 2u * static_cast<std::size_t>(n_); }
  cplx& at(int r, int c) { return mat_[static_cast<std::size_t>(c) * dim() + static_cast<std::size_t>(r)]; }
  cplx at(int r, int c) const { return mat_[static_cast<std::size_t>(c) * dim() + static_cast<std::size_t>(r)]; }

  std::vector<cplx> apply(const std::vector<cplx>& v) const {
    std::vector<cplx> out(dim(), cplx{});
    for (std::size_t c = 0; c < dim(); ++c) {
      const cplx vc = v[c];
      if (vc == cplx{}) continue;
      const cplx* col = &mat_[c * dim()];
      for (std::size_t r = 0; r < dim(); ++r) out[r] += col[r] * vc;
    }
    return out;
  }

  std::vector<cplx> apply_power(std::vector<cplx> v, long t) const {
    for (long s = 0; s < t; ++s) v = apply(v);
    return v;
  }

  /// max |(U†U - I)_{rc}|.
  double unitarity_defect() const {
    double worst = 0;
    for (std::size_t c = 0; c < dim(); ++c) {
      for (std::size_t r = 0; r < dim(); ++r) {
        cplx s = 0;
        for (std::size_t k = 0; k < dim(); ++k) s += std::conj(at(static_cast<int>(k), static_cast<int>(r))) * at(static_cast<int>(k), static_cast<int>(c));
        if (r == c) s -= 1.0;
        worst = std::max(worst, std::abs(s));
      }
    }
    return worst;
  }

  std::vector<cplx> to_dense(const SpinorField& u) const {
    std::vector<cplx> v(dim(), cplx{});
    for (int s = 0; s < n_; ++s) {
      const Spinor sp = u.at(window_.lo + s);
      v[2 * static_cast<std::size_t>(s)] = sp.up;
      v[2 * static_cast<std::size_t>(s) + 1] = sp.down;
    }
    return v;
  }

  SpinorField from_dense(const std::vector<cplx>& v) const {
    SpinorField u(window_);
    for (int s = 0; s < n_; ++s)
      u[window_.lo + s] = {v[2 * static_cast<std::size_t>(s)], v[2 * static_cast<std::size_t>(s) + 1]};
    return u;
  }

  struct EigenSystem {
    std::vector<double> angles;     // arg of the unit-circle eigenvalues, ascending
    std::vector<cplx> vectors;      // column-major, orthonormal
    double max_residual = 0;        // max ‖Uq - wq‖₂ over columns
    std::size_t dim = 0;
  };

  /// Full orthonormal eigensystem. The walk matrix is normal, so we
  /// diagonalize the Hermitian part and resolve each degenerate cos-cluster
  /// with a small Schur decomposition of the walk restricted to the cluster.
  EigenSystem eigensystem() const {
    const std::size_t d = dim();
    std::vector<cplx> h(d * d);
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t r = 0; r < d; ++r)
        h[c * d + r] = 0.5 * (at(static_cast<int>(r), static_cast<int>(c)) +
                              std::conj(at(static_cast<int>(c), static_cast<int>(r))));
    std::vector<double> cosines(d);
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(d),
                              reinterpret_cast<lapack_complex_double*>(h.data()),
                              static_cast<lapack_int>(d), cosines.data());
    if (info != 0) throw SolverError("dense walk: zheevd failed");

    EigenSystem out;
    out.dim = d;
    out.vectors.assign(d * d, cplx{});
    out.angles.assign(d, 0.0);

    const double ctol = 1e-7;
    std::size_t i = 0;
    while (i < d) {
      std::size_t j = i + 1;
      while (j < d && cosines[j] - cosines[j - 1] < ctol) ++j;
      const std::size_t m = j - i;  // cluster size
      // B = Q_c† U Q_c on the cluster's invariant subspace
      std::vector<std::vector<cplx>> uq(m);
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<cplx> q(h.begin() + static_cast<std::ptrdiff_t>((i + k) * d),
                            h.begin() + static_cast<std::ptrdiff_t>((i + k + 1) * d));
        uq[k] = apply_fast(q);
      }
      std::vector<cplx> b(m * m);
      for (std::size_t kc = 0; kc < m; ++kc)
        for (std::size_t kr = 0; kr < m; ++kr) {
          cplx s = 0;
          for (std::size_t r = 0; r < d; ++r)
            s += std::conj(h[(i + kr) * d + r]) * uq[kc][r];
          b[kc * m + kr] = s;
        }
      std::vector<cplx> w(m), vs(m * m);
      lapack_int sdim = 0;
      info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, static_cast<lapack_int>(m),
                           reinterpret_cast<lapack_complex_double*>(b.data()),
                           static_cast<lapack_int>(m), &sdim,
                           reinterpret_cast<lapack_complex_double*>(w.data()),
                           reinterpret_cast<lapack_complex_double*>(vs.data()),
                           static_cast<lapack_int>(m));
      if (info != 0) throw SolverError("dense walk: cluster zgees failed");
      for (std::size_t kc = 0; kc < m; ++kc) {
        out.angles[i + kc] = std::arg(w[kc]);
        cplx* dst = &out.vectors[(i + kc) * d];
        for (std::size_t kr = 0; kr < m; ++kr) {
          const cplx z = vs[kc * m + kr];
          const cplx* src = &h[(i + kr) * d];
          for (std::size_t r = 0; r < d; ++r) dst[r] += z * src[r];
        }
      }
      i = j;
    }

    // residual spot check on a spread of columns
    for (std::size_t k = 0; k < d; k += std::max<std::size_t>(1, d / 16)) {
      std::vector<cplx> q(out.vectors.begin() + static_cast<std::ptrdiff_t>(k * d),
                          out.vectors.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
      auto r = apply_fast(q);
      const cplx w = std::polar(1.0, out.angles[k]);
      double n2 = 0;
      for (std::size_t rr = 0; rr < d; ++rr) n2 += std::norm(r[rr] - w * q[rr]);
      out.max_residual = std::max(out.max_residual, std::sqrt(n2));
    }
    return out;
  }

  /// Fast structured apply (the matrix is block-banded with a periodic
  /// seam); used where the dense matvec cost matters.
  std::vector<cplx> apply_fast(const std::vector<cplx>& v) const {
    std::vector<cplx> out(dim());
    for (int s = 0; s < n_; ++s) {
      const Mat2& c = coin_cache_[static_cast<std::size_t>(s)];
      const cplx up = v[2 * static_cast<std::size_t>(s)];
      const cplx dn = v[2 * static_cast<std::size_t>(s) + 1];
      out[2 * static_cast<std::size_t>((s + 1) % n_)] += c.a * up + c.b * dn;
      out[2 * static_cast<std::size_t>((s - 1 + n_) % n_) + 1] += c.c * up + c.d * dn;
    }
    return out;
  }

  /// Eigenvalue angles inside the spectral gaps only. |cos λ| > ρ₀ + margin
  /// is the single interval cos 2λ > 2(ρ₀+margin)² - 1, so one range query
  /// on the Hermitian part of U² selects every gap eigenvector; a small
  /// Schur step per degenerate cluster then recovers the exact angles.
  std::vector<double> gap_angles(double rho0, double cos_margin = 1e-3) const {
    const std::size_t d = dim();
    std::vector<cplx> h2(d * d);
    {
      std::vector<cplx> e(d, cplx{});
      for (std::size_t j = 0; j < d; ++j) {
        e[j] = 1.0;
        const auto col = apply_fast(apply_fast(e));
        e[j] = 0.0;
        for (std::size_t r = 0; r < d; ++r) h2[j * d + r] = col[r];
      }
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r <= c; ++r) {
          const cplx v = 0.5 * (h2[c * d + r] + std::conj(h2[r * d + c]));
          h2[c * d + r] = v;
          h2[r * d + c] = std::conj(v);
        }
    }
    const double thresh = 2.0 * (rho0 + cos_margin) * (rho0 + cos_margin) - 1.0;
    lapack_int found = 0;
    std::vector<double> w(d);
    std::vector<cplx> z(d * d);
    std::vector<lapack_int> isuppz(2 * d);
    const int info = LAPACKE_zheevr(
        LAPACK_COL_MAJOR, 'V', 'V', 'L', static_cast<lapack_int>(d),
        reinterpret_cast<lapack_complex_double*>(h2.data()), static_cast<lapack_int>(d), thresh,
        2.0, 0, 0, 0.0, &found, w.data(), reinterpret_cast<lapack_complex_double*>(z.data()),
        static_cast<lapack_int>(d), isuppz.data());
    if (info != 0) throw SolverError("dense walk: zheevr failed");

    std::vector<double> angles;
    std::size_t i = 0;
    while (i < static_cast<std::size_t>(found)) {
      std::size_t j = i + 1;
      while (j < static_cast<std::size_t>(found) && w[j] - w[j - 1] < 1e-7) ++j;
      const std::size_t m = j - i;
      std::vector<cplx> b(m * m);
      std::vector<std::vector<cplx>> uq(m);
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<cplx> q(z.begin() + static_cast<std::ptrdiff_t>((i + k) * d),
                            z.begin() + static_cast<std::ptrdiff_t>((i + k + 1) * d));
        uq[k] = apply_fast(q);
      }
      for (std::size_t kc = 0; kc < m; ++kc)
        for (std::size_t kr = 0; kr < m; ++kr) {
          cplx s = 0;
          for (std::size_t r = 0; r < d; ++r) s += std::conj(z[(i + kr) * d + r]) * uq[kc][r];
          b[kc * m + kr] = s;
        }
      std::vector<cplx> ev(m), vs(1);
      lapack_int sdim = 0;
      if (LAPACKE_zgees(LAPACK_COL_MAJOR, 'N', 'N', nullptr, static_cast<lapack_int>(m),
                        reinterpret_cast<lapack_complex_double*>(b.data()),
                        static_cast<lapack_int>(m), &sdim,
                        reinterpret_cast<lapack_complex_double*>(ev.data()),
                        reinterpret_cast<lapack_complex_double*>(vs.data()), 1) != 0)
        throw SolverError("dense walk: cluster zgees failed");
      for (std::size_t k = 0; k < m; ++k) {
        if (std::abs(std::abs(ev[k]) - 1.0) > 1e-6)
          throw NumericalConsistencyError("dense walk: cluster eigenvalue left the unit circle");
        angles.push_back(std::arg(ev[k]));
      }
      i = j;
    }
    std::sort(angles.begin(), angles.end());
    return angles;
  }

 private:
  Window window_;
  int n_;
  std::vector<cplx> mat_;
  std::vector<Mat2> coin_cache_;
};

}  // namespace qws
