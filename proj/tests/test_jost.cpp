#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "qws/fftutil.hpp"
#include "qws/jost.hpp"

using namespace qws;
using namespace qwstest;

namespace {
const cplx kAlpha(1.0 / std::numbers::sqrt2, 0.0);
const double kRho = 1.0 / std::numbers::sqrt2;
}  // namespace

TEST_CASE("transfer matrix structure") {
  std::mt19937_64 rng(3);
  CoinField coin = defect_coin(0.3, 0, 0.4);
  coin.set_entry(2, random_coin_point(rng));
  auto [red, g] = gauge_reduce(coin);

  double det_defect = 0, sym_defect = 0;
  for (int i = 0; i < 100; ++i) {
    const int x = static_cast<int>(rng() % 9) - 4;
    const cplx lambda{2 * std::numbers::pi * u01(rng), u01(rng) - 0.5};
    const Mat2 T = transfer_matrix(red, x, lambda);
    det_defect = std::max(det_defect, std::abs(T.det() - 1.0));
    const Mat2 Tc = transfer_matrix(red, x, std::conj(lambda));
    sym_defect = std::max(sym_defect, (Tc - (sigma1 * T * sigma1).conj()).frobenius_norm());
  }
  CHECK(det_defect < 1e-13);
  CHECK(sym_defect < 1e-13);

  // free transfer matrix has eigenvalues e^{±i xi} on the dispersion curve
  // (away from the corners, where root extraction itself degenerates)
  double eig_defect = 0;
  for (int j = 1; j < 32; ++j) {
    if (j == 16) continue;
    const double xi = 2 * std::numbers::pi * j / 32;
    const cplx lam = lambda_of_xi({cplx(xi, 0), Branch::Minus}, kRho);
    const Mat2 T = free_transfer(lam, kAlpha);
    // eigenvalues from trace and determinant
    const cplx tr = T.trace();
    const cplx disc = std::sqrt(tr * tr - 4.0 * T.det());
    const cplx e1 = 0.5 * (tr + disc), e2 = 0.5 * (tr - disc);
    const cplx expect1 = std::exp(iu * cplx(xi)), expect2 = std::exp(-iu * cplx(xi));
    eig_defect = std::max(eig_defect, std::min(std::abs(e1 - expect1) + std::abs(e2 - expect2),
                                               std::abs(e1 - expect2) + std::abs(e2 - expect1)));
  }
  CHECK(eig_defect < 1e-12);
}

TEST_CASE("perturbation matrices") {
  const CoinField free_coin(kAlpha);
  const QuasiMomentum q{cplx(1.3, 0), Branch::Minus};
  for (int x : {-3, 0, 5}) CHECK(potential(free_coin, q, Side::Plus, x).frobenius_norm() == 0.0);

  const CoinField defect = defect_coin(0.3);
  for (int x = -5; x <= 5; ++x) {
    const double n = potential(defect, q, Side::Plus, x).frobenius_norm();
    if (x == 0)
      CHECK(n > 0.1);
    else
      CHECK(n == 0.0);
  }

  // summability constant against the coin's perturbation norm
  CoinField mixed = defect_coin(0.3, 0, 0.4);
  const double pn = perturbation_norm(mixed, 0);
  double worst = 0;
  for (int j = 0; j < 32; ++j) {
    const QuasiMomentum qq{cplx(2 * std::numbers::pi * j / 32, 0), Branch::Minus};
    double sum = 0;
    for (int x = -4; x <= 4; ++x) sum += potential(mixed, qq, Side::Plus, x).op_norm();
    worst = std::max(worst, sum / pn);
  }
  CHECK(worst <= 4.0);
}

TEST_CASE("free Jost solutions coincide with the plane waves") {
  const CoinField coin(kAlpha);
  const auto t = solve_jost(coin, Branch::Minus, 64, 0.0, Window{-10, 10});
  double worst = 0;
  for (int j = 0; j < 64; ++j) {
    const auto e = free_eigenpair(t.q(j), kAlpha);
    for (int x = -10; x <= 10; ++x) {
      worst = std::max(worst, (t.mp(j, x) - e.phi_plus).norm());
      worst = std::max(worst, (t.mm(j, x) - e.phi_minus).norm());
    }
  }
  CHECK(worst < 1e-15);
}

TEST_CASE("defect Jost solutions") {
  const CoinField coin = defect_coin(0.3);
  const Window w{-15, 15};
  const auto table = solve_jost(coin, Branch::Minus, 128, 0.0, w);

  SECTION("plane wave to the right of the support") {
    for (int j : {1, 40, 77}) {
      const auto e = free_eigenpair(table.q(j), kAlpha);
      for (int x = 1; x <= 15; ++x) CHECK((table.mp(j, x) - e.phi_plus).norm() == 0.0);
      for (int x = -15; x <= -2; ++x) CHECK((table.mm(j, x) - e.phi_minus).norm() < 1e-14);
    }
  }

  SECTION("backward substitution equals transfer back-propagation") {
    const QuasiMomentum q{cplx(std::numbers::pi / 2, 0), Branch::Minus};
    const auto e = free_eigenpair(q, kAlpha);
    const auto m = detail::solve_m_plus(coin, q, e.phi_plus, w);
    const cplx lambda = lambda_of_xi(q, kRho);
    std::vector<Spinor> oracle(static_cast<std::size_t>(w.size()));
    oracle.back() = e.phi_plus;
    for (int x = w.hi - 1; x >= w.lo; --x) {
      const Mat2 M = std::exp(-iu * q.xi) * transfer_matrix(coin, x, lambda);
      oracle[static_cast<std::size_t>(x - w.lo)] =
          M.inverse() * oracle[static_cast<std::size_t>(x + 1 - w.lo)];
    }
    double worst = 0;
    for (int x = w.lo; x <= w.hi; ++x)
      worst = std::max(worst, (m[static_cast<std::size_t>(x - w.lo)] -
                               oracle[static_cast<std::size_t>(x - w.lo)]).norm());
    CHECK(worst < 1e-11);
  }

  SECTION("recursion residual and far field") {
    for (int j = 0; j < 128; ++j) CHECK(table.residual[static_cast<std::size_t>(j)] < 1e-12);
    for (int j : {3, 64, 101}) {
      const auto e = free_eigenpair(table.q(j), kAlpha);
      CHECK((table.mp(j, w.hi) - e.phi_plus).norm() == 0.0);
      CHECK((table.mm(j, w.lo) - e.phi_minus).norm() < 1e-14);
    }
  }

}

TEST_CASE("minus side against forward substitution") {
  const CoinField coin = defect_coin(0.35, 1, 0.2);
  auto [red, g] = gauge_reduce(coin);
  const Window w{-12, 12};
  const auto table = solve_jost(coin, Branch::Minus, 64, 0.0, w);
  double worst = 0;
  for (int j = 0; j < 64; ++j) {
    const auto e = free_eigenpair(table.q(j), kAlpha);
    const auto fwd = detail::solve_m_minus_forward(red, table.q(j), e.phi_minus, w);
    for (int x = w.lo; x <= w.hi; ++x)
      worst = std::max(worst, (table.mm(j, x) - fwd[static_cast<std::size_t>(x - w.lo)]).norm());
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("iterative refinement cross-check") {
  const CoinField coin = defect_coin(0.1);
  const QuasiMomentum q{cplx(std::numbers::pi / 2, 0), Branch::Minus};
  const Window w{-8, 8};
  const auto picard = jost_plus_iterative(coin, q, w, 64);
  const auto e = free_eigenpair(q, kAlpha);
  const auto direct = detail::solve_m_plus(coin, q, e.phi_plus, w);
  double worst = 0;
  for (int x = w.lo; x <= w.hi; ++x)
    worst = std::max(worst, (picard[static_cast<std::size_t>(x - w.lo)] -
                             direct[static_cast<std::size_t>(x - w.lo)]).norm());
  CHECK(worst < 1e-10);
}

TEST_CASE("Wronskian constancy and conjugation symmetry") {
  const CoinField coin = defect_coin(0.3);
  const auto table = solve_jost(coin, Branch::Minus, 128, 0.0, Window{-20, 20});
  double var = 0;
  for (int j = 0; j < 128; ++j) var = std::max(var, wronskian_variation(table, j));
  CHECK(var < 1e-11);

  // gamma sigma1 conj(phi(x, xi)) = phi(x, -xi) for the full Jost solutions
  double sym = 0;
  for (int j = 1; j < 128; ++j) {
    if (j == 64) continue;
    const double xi = table.xi_base[static_cast<std::size_t>(j)];
    const cplx gam = symmetry_factor(xi, kAlpha);
    const int jm = table.minus_index(j);
    for (int x : {-7, -1, 0, 2, 9}) {
      const cplx phase_p = std::exp(iu * cplx(xi) * static_cast<double>(x));
      const Spinor pp = phase_p * table.mp(j, x);
      const Spinor pm = (1.0 / phase_p) * table.mp(jm, x);
      const Spinor lhs{gam * std::conj(pp.down), gam * std::conj(pp.up)};
      sym = std::max(sym, (lhs - pm).norm());
    }
  }
  CHECK(sym < 1e-10);
}

TEST_CASE("uniform and growth bounds") {
  const CoinField coin = defect_coin(0.3);
  const auto table = solve_jost(coin, Branch::Minus, 512, 0.0, Window{-40, 40});
  double c_sup = 0;
  for (int j = 0; j < 512; ++j)
    for (int x = -40; x <= 40; ++x)
      c_sup = std::max(c_sup, table.mp(j, x).norm() / std::max(1.0, static_cast<double>(-x)));
  CHECK(c_sup < 3.0);
}

TEST_CASE("Wiener algebra norms") {
  // constant function
  std::vector<cplx> c(64, cplx(0.3, -0.4));
  CHECK_THAT(wiener_norm(c, 0), Catch::Matchers::WithinAbs(0.5, 1e-12));
  // single mode at n = 3, first-order weight <3> = sqrt(10)
  std::vector<cplx> mode(64);
  for (int j = 0; j < 64; ++j) mode[static_cast<std::size_t>(j)] = std::exp(3.0 * iu * cplx(2 * std::numbers::pi * j / 64));
  CHECK_THAT(wiener_norm(mode, 1), Catch::Matchers::WithinAbs(std::sqrt(10.0), 1e-12));
  CHECK_THROWS_AS(wiener_norm(std::vector<cplx>(48), 0), ConfigError);
  CHECK_THROWS_AS(wiener_norm(c, 2), ConfigError);

  // stability of an analytic function's norm under grid doubling
  auto samples = [](int n) {
    std::vector<cplx> s(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
      s[static_cast<std::size_t>(j)] =
          lambda_of_xi({cplx(2 * std::numbers::pi * j / n, 0), Branch::Minus}, kRho);
    return s;
  };
  const double w256 = wiener_norm(samples(256), 0);
  const double w512 = wiener_norm(samples(512), 0);
  CHECK(std::abs(w512 - w256) < 1e-9);
}

TEST_CASE("Jost Wiener growth in x") {
  const CoinField coin = defect_coin(0.3);
  const auto table = solve_jost(coin, Branch::Minus, 512, 0.0, Window{-40, 40});
  double C = 0;
  for (int x = -40; x <= 40; ++x) {
    const double wn = wiener_norm(table.samples(Side::Plus, x), 0);
    C = std::max(C, wn / std::max(1.0, static_cast<double>(-x)));
  }
  CHECK(C < 4.0);
  // to the right of the support the norm is that of the plane wave itself
  const double right = wiener_norm(table.samples(Side::Plus, 30), 0);
  const double farright = wiener_norm(table.samples(Side::Plus, 40), 0);
  CHECK_THAT(right, Catch::Matchers::WithinAbs(farright, 1e-12));
}

TEST_CASE("one-step powers stay summable in the Wiener norm") {
  double C = 0;
  for (long x : {-1L, -2L, -5L, -10L, -20L}) {
    std::vector<cplx> sa(512), sb(512), sc(512), sd(512);
    for (int j = 0; j < 512; ++j) {
      const QuasiMomentum q{cplx(2 * std::numbers::pi * j / 512, 1e-3), Branch::Minus};
      const Mat2 m = free_one_step_power(q, kAlpha, Side::Plus, x);
      sa[static_cast<std::size_t>(j)] = m.a;
      sb[static_cast<std::size_t>(j)] = m.b;
      sc[static_cast<std::size_t>(j)] = m.c;
      sd[static_cast<std::size_t>(j)] = m.d;
    }
    const double wn =
        std::max({wiener_norm(sa, 0), wiener_norm(sb, 0), wiener_norm(sc, 0), wiener_norm(sd, 0)});
    C = std::max(C, wn / bracket(x));
  }
  CHECK(C < 4.0);
}

TEST_CASE("boundary tables converge as the strip shift vanishes") {
  const CoinField coin = defect_coin(0.3);
  const Window w{-24, 24};
  const auto t0 = solve_jost(coin, Branch::Minus, 256, 0.0, w);
  const auto t1 = solve_jost(coin, Branch::Minus, 256, 1e-3, w);
  const auto t2 = solve_jost(coin, Branch::Minus, 256, 5e-4, w);
  auto dist = [&](const JostTable& ta, int x) {
    auto s0 = t0.samples(Side::Plus, x);
    auto s1 = ta.samples(Side::Plus, x);
    std::vector<Spinor> diff(s0.size());
    for (std::size_t j = 0; j < s0.size(); ++j) diff[j] = s1[j] - s0[j];
    return wiener_norm(diff, 0);
  };
  for (int x : {0, 3, 10}) {
    const double d1 = dist(t1, x), d2 = dist(t2, x);
    CHECK(d1 < 1e-2);
    CHECK(d2 < 0.65 * d1);  // shrinks linearly in the shift
  }
  // left of the support the solution grows like |x| and carries Fourier
  // modes up to frequency ~2|x|, so the relative distance picks up an extra
  // factor of the site index
  for (int x : {-6, -15}) {
    const double scale = wiener_norm(t0.samples(Side::Plus, x), 0) * bracket(2 * x);
    const double d1 = dist(t1, x), d2 = dist(t2, x);
    CHECK(d1 / scale < 2e-3);
    CHECK(d2 < 0.65 * d1);
  }
}

TEST_CASE("solver guards") {
  CHECK_THROWS_AS(solve_jost(CoinField(kAlpha), Branch::Minus, 100, 0.0, Window{-4, 4}), ConfigError);
  CHECK_THROWS_AS(solve_jost(CoinField(kAlpha), Branch::Minus, 64, 2.0, Window{-4, 4}), DomainError);
  CHECK_THROWS_AS(solve_jost(defect_coin(0.3), Branch::Minus, 64, 0.0, Window{3, 9}), ConfigError);
}
