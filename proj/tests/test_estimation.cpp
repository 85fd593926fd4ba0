#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "panelvuong/error.hpp"
#include "panelvuong/estimation.hpp"
#include "panelvuong/likelihood.hpp"

using namespace panelvuong;
using oracle::rel_gap;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Empty;
}

std::vector<std::size_t> random_blocks(std::size_t T, std::size_t M, Stream& rng) {
  // M contiguous non-empty blocks with random cut points.
  std::vector<std::size_t> cuts(T - 1);
  std::iota(cuts.begin(), cuts.end(), 1);
  for (std::size_t k = cuts.size(); k-- > 1;) std::swap(cuts[k], cuts[static_cast<std::size_t>(rng.uniform() * (k + 1))]);
  cuts.resize(M - 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::size_t> a(T);
  std::size_t b = 0;
  for (std::size_t t = 0; t < T; ++t) {
    while (b < cuts.size() && t >= cuts[b]) ++b;
    a[t] = b;
  }
  return a;
}

}  // namespace

TEST_CASE("profile fit without covariates gives unit means") {
  Stream rng(41, 0, 0);
  const Panel p = oracle::random_panel(6, 5, 0, rng);
  const FitResult f = fit_profile_mle(p, {gaussian_fixed_scale(0), GroupMap::individual(6), std::nullopt});
  CHECK(f.theta_hat.size() == 0);
  double ll = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 5; ++t) mean += p.y(i, t) / 5.0;
    CHECK(f.gamma_hat(static_cast<Eigen::Index>(i), 0) == doctest::Approx(mean).epsilon(1e-12));
    for (std::size_t t = 0; t < 5; ++t) ll -= 0.5 * (p.y(i, t) - mean) * (p.y(i, t) - mean);
  }
  CHECK(f.loglik == doctest::Approx(ll).epsilon(1e-12));
  CHECK(f.converged);
}

TEST_CASE("profile fit matches dummy-variable least squares") {
  Stream rng(42, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = oracle::random_int(2, 12, rng), T = oracle::random_int(2, 10, rng);
    const std::size_t K = oracle::random_int(1, 2, rng), G = oracle::random_int(1, n, rng);
    const Panel p = oracle::random_panel(n, T, K, rng);
    const GroupMap gmap = oracle::random_groups(n, G, rng);
    const FitResult f = fit_profile_mle(p, {gaussian_fixed_scale(K), gmap, std::nullopt});
    const std::vector<std::size_t> single(T, 0);
    const oracle::DummyFit o = oracle::dummy_ols(p, oracle::cell_dummies(p, gmap, single, 1));
    CHECK(rel_gap(f.theta_hat, o.theta) <= 1e-8);
    CHECK(rel_gap(f.gamma_hat.col(0), o.dummies) <= 1e-8);
    CHECK(f.loglik == doctest::Approx(-0.5 * o.residuals.squaredNorm()).epsilon(1e-8));
    CHECK(f.foc_theta <= 1e-10);
    CHECK(f.foc_gamma <= 1e-10);
    CHECK((f.info_gamma.array() == -1.0).all());
  }
}

TEST_CASE("full-scale profile fit: slope as least squares, scale as mean squared residual") {
  Stream rng(43, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = oracle::random_int(3, 15, rng), T = oracle::random_int(2, 8, rng);
    const Panel p = oracle::random_panel(n, T, 2, rng);
    const GroupMap gmap = oracle::random_groups(n, oracle::random_int(1, n, rng), rng);
    const FitResult full = fit_profile_mle(p, {gaussian_full_scale(2), gmap, std::nullopt});
    const FitResult ls = fit_linear_cells(p, gmap, TimeGroupMap::single(T));
    const double s2 = -2.0 * ls.loglik / static_cast<double>(n * T);
    CHECK(rel_gap(full.theta_hat.head(2), ls.theta_hat) <= 1e-8);
    CHECK(full.theta_hat[2] == doctest::Approx(s2).epsilon(1e-8));
    CHECK(rel_gap(full.gamma_hat, ls.gamma_hat) <= 1e-8);
    CHECK((full.info_gamma.array() < 0.0).all());
    CHECK(full.foc_theta <= 1e-10);
    CHECK(full.foc_gamma <= 1e-10);
    double psi_sum = full.psi.sum();
    CHECK(full.loglik == doctest::Approx(psi_sum).epsilon(1e-14));
  }
}

TEST_CASE("full-scale fit on a panel without within-unit variation is singular") {
  PanelInput raw;
  raw.y = {{1, 1, 1}, {2, 2, 2}, {-1, -1, -1}};
  const Panel p = validate_panel(raw);
  CHECK(code_of([&] {
          fit_profile_mle(p, {gaussian_full_scale(0), GroupMap::individual(3), std::nullopt});
        }) == ErrorCode::SingularInformation);
}

TEST_CASE("profile fit reports non-convergence") {
  Stream rng(44, 0, 0);
  const Panel p = oracle::random_panel(5, 4, 1, rng);
  ProfileOptions opts;
  opts.max_iter = 0;
  CHECK(code_of([&] {
          fit_profile_mle(p, {gaussian_full_scale(1), GroupMap::individual(5), std::nullopt}, opts);
        }) == ErrorCode::NoConvergence);
}

TEST_CASE("linear cell fits: definitional reductions") {
  Stream rng(45, 0, 0);
  const std::size_t n = 7, T = 6;
  const Panel p = oracle::random_panel(n, T, 1, rng);

  SUBCASE("individual effects reduce to the within estimator") {
    const FitResult f = fit_linear_cells(p, GroupMap::individual(n), TimeGroupMap::single(T));
    double sxx = 0.0, sxy = 0.0;
    std::vector<double> xb(n, 0.0), yb(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < T; ++t) {
        xb[i] += p.x(i, t, 0) / T;
        yb[i] += p.y(i, t) / T;
      }
      for (std::size_t t = 0; t < T; ++t) {
        sxx += (p.x(i, t, 0) - xb[i]) * (p.x(i, t, 0) - xb[i]);
        sxy += (p.x(i, t, 0) - xb[i]) * (p.y(i, t) - yb[i]);
      }
    }
    CHECK(f.theta_hat[0] == doctest::Approx(sxy / sxx).epsilon(1e-12));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(f.gamma_hat(i, 0) == doctest::Approx(yb[i] - xb[i] * f.theta_hat[0]).epsilon(1e-12));
    }
  }
  SUBCASE("pure time effects") {
    const FitResult f = fit_linear_cells(p, GroupMap::pooled(n), TimeGroupMap::identity(T));
    for (std::size_t t = 0; t < T; ++t) {
      double xb = 0.0, yb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        xb += p.x(i, t, 0) / n;
        yb += p.y(i, t) / n;
      }
      CHECK(f.gamma_hat(0, t) == doctest::Approx(yb - xb * f.theta_hat[0]).epsilon(1e-12));
    }
  }
  SUBCASE("covariate constant within cells is rank deficient") {
    PanelInput raw;
    raw.y = {{1, 2}, {3, 4}, {5, 7}, {2, 2}};
    raw.x = {{{1, 1}, {2, 2}, {3, 3}, {4, 4}}};
    const Panel q = validate_panel(raw);
    CHECK(code_of([&] { fit_linear_cells(q, GroupMap::individual(4), TimeGroupMap::single(2)); }) ==
          ErrorCode::RankDeficient);
  }
}

TEST_CASE("linear cell fits match dummy-variable least squares with time blocks") {
  Stream rng(46, 0, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = oracle::random_int(2, 12, rng), T = oracle::random_int(2, 12, rng);
    if (n * T > 200) continue;
    const std::size_t K = oracle::random_int(0, 2, rng);
    const Panel p = oracle::random_panel(n, T, K, rng);
    const std::size_t G = oracle::random_int(1, n, rng), M = oracle::random_int(1, T, rng);
    const GroupMap gmap = oracle::random_groups(n, G, rng);
    const std::vector<std::size_t> blocks = random_blocks(T, M, rng);
    // Saturated designs leave no within variation for the slopes.
    if (K > 0 && (G == n && M == T)) continue;
    FitResult f;
    try {
      f = fit_linear_cells(p, gmap, TimeGroupMap(blocks, M));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
      continue;
    }
    const oracle::DummyFit o = oracle::dummy_ols(p, oracle::cell_dummies(p, gmap, blocks, M));
    CHECK(rel_gap(f.theta_hat, o.theta) <= 1e-8);
    Eigen::VectorXd gam(G * M);
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t m = 0; m < M; ++m) gam[g * M + m] = f.gamma_hat(g, m);
    }
    CHECK(rel_gap(gam, o.dummies) <= 1e-8);
    CHECK(f.foc_gamma <= 1e-10);
  }
}

TEST_CASE("grouped time effects") {
  Stream rng(47, 0, 0);
  SUBCASE("no covariates gives group-time means") {
    const Panel p = oracle::random_panel(6, 4, 0, rng);
    const GroupMap gmap({0, 1, 0, 2, 1, 0}, 3);
    const GroupedTimeFit f = fit_grouped_time(p, gmap);
    for (std::size_t g = 0; g < 3; ++g) {
      for (std::size_t t = 0; t < 4; ++t) {
        double s = 0.0;
        for (std::size_t i : gmap.members(g)) s += p.y(i, t);
        CHECK(f.gamma_gt(g, t) == doctest::Approx(s / gmap.size_of(g)).epsilon(1e-14));
      }
    }
  }
  SUBCASE("saturated grouping leaves no residual") {
    const Panel p = oracle::random_panel(5, 4, 0, rng);
    const GroupedTimeFit f = fit_grouped_time(p, GroupMap::individual(5));
    CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("agrees with cell fits on time-identity blocks and with dummies") {
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = oracle::random_int(3, 15, rng), T = oracle::random_int(2, 12, rng);
      const std::size_t G = oracle::random_int(1, n - 1, rng);
      const Panel p = oracle::random_panel(n, T, 1, rng);
      const GroupMap gmap = oracle::random_groups(n, G, rng);
      if (std::all_of(gmap.assignment().begin(), gmap.assignment().end(),
                      [&](std::size_t g) { return gmap.size_of(g) == 1; })) {
        continue;
      }
      const GroupedTimeFit f = fit_grouped_time(p, gmap);
      const FitResult c = fit_linear_cells(p, gmap, TimeGroupMap::identity(T));
      CHECK(rel_gap(f.theta_hat, c.theta_hat) <= 1e-10);
      CHECK(rel_gap(f.gamma_gt, c.gamma_hat) <= 1e-10);
      std::vector<std::size_t> ident(T);
      std::iota(ident.begin(), ident.end(), 0);
      const oracle::DummyFit o = oracle::dummy_ols(p, oracle::cell_dummies(p, gmap, ident, T));
      CHECK(rel_gap(f.theta_hat, o.theta) <= 1e-8);
      for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t t = 0; t < T; ++t) {
          double s = 0.0;
          for (std::size_t i : gmap.members(g)) s += f.residuals(i, t);
          CHECK(std::abs(s) <= 1e-12 * std::max(1.0, f.residuals.cwiseAbs().maxCoeff()) * n);
        }
      }
    }
  }
}

TEST_CASE("two-way fit") {
  SUBCASE("hand-computed 2x2") {
    const Panel p = validate_panel(PanelInput{{{1, 2}, {3, 4}}, {}});
    const TwfeFit f = fit_twfe(p);
    CHECK(f.alpha[0] == doctest::Approx(1.5));
    CHECK(f.alpha[1] == doctest::Approx(3.5));
    CHECK(f.delta[0] == doctest::Approx(-0.5));
    CHECK(f.delta[1] == doctest::Approx(0.5));
    CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("additive data is fit exactly") {
    PanelInput raw;
    const std::vector<double> a{0.3, -1.0, 2.0, 0.5}, b{1.0, -0.25, 0.75};
    raw.y.assign(4, std::vector<double>(3));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t t = 0; t < 3; ++t) raw.y[i][t] = a[i] + b[t];
    }
    const TwfeFit f = fit_twfe(validate_panel(raw));
    CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("random panels against unit and time dummies") {
    Stream rng(48, 0, 0);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = oracle::random_int(2, 14, rng), T = oracle::random_int(2, 14, rng);
      const std::size_t K = oracle::random_int(0, 2, rng);
      if (n * T > 200) continue;
      const Panel p = oracle::random_panel(n, T, K, rng);
      TwfeFit f;
      try {
        f = fit_twfe(p);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficient);
        continue;
      }
      const oracle::TwowayOracle o = oracle::twoway_ols(p);
      CHECK(rel_gap(f.theta_hat, o.theta) <= 1e-8);
      CHECK(rel_gap(f.alpha, o.alpha) <= 1e-8);
      CHECK(rel_gap(f.delta, o.delta) <= 1e-8);
      const double scale = std::max(1.0, f.residuals.cwiseAbs().maxCoeff());
      CHECK(std::abs(f.delta.sum()) <= 1e-12 * std::max(1.0, f.delta.cwiseAbs().maxCoeff()) * T);
      CHECK(f.residuals.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * scale * T);
      CHECK(f.residuals.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * scale * n);
    }
  }
}

TEST_CASE("profile fit agrees with the closed form and is label invariant") {
  Stream rng(49, 0, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = oracle::random_int(3, 15, rng), T = oracle::random_int(2, 10, rng);
    const std::size_t K = oracle::random_int(0, 2, rng);
    const Panel p = oracle::random_panel(n, T, K, rng);
    const std::size_t G = oracle::random_int(1, n, rng);
    const GroupMap gmap = oracle::random_groups(n, G, rng);
    const FitResult prof = fit_profile_mle(p, {gaussian_fixed_scale(K), gmap, std::nullopt});
    const FitResult lin = fit_linear_cells(p, gmap, TimeGroupMap::single(T));
    CHECK(rel_gap(prof.theta_hat, lin.theta_hat) <= 1e-8);
    CHECK(rel_gap(prof.gamma_hat, lin.gamma_hat) <= 1e-8);
    CHECK(prof.loglik == doctest::Approx(lin.loglik).epsilon(1e-10));

    // Relabel groups by a cyclic shift, and reverse the unit order.
    std::vector<std::size_t> relabeled(n), reversed_groups(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = (gmap.group_of(i) + 1) % G;
    const FitResult shifted = fit_linear_cells(p, GroupMap(relabeled, G), TimeGroupMap::single(T));
    CHECK(rel_gap(shifted.theta_hat, lin.theta_hat) <= 1e-12);
    CHECK(shifted.loglik == doctest::Approx(lin.loglik).epsilon(1e-12));
    for (std::size_t g = 0; g < G; ++g) {
      CHECK(shifted.gamma_hat((g + 1) % G, 0) == doctest::Approx(lin.gamma_hat(g, 0)).epsilon(1e-10));
    }

    PanelInput raw = p.to_input();
    PanelInput rev = raw;
    for (std::size_t i = 0; i < n; ++i) {
      rev.y[i] = raw.y[n - 1 - i];
      for (std::size_t k = 0; k < K; ++k) rev.x[k][i] = raw.x[k][n - 1 - i];
      reversed_groups[i] = gmap.group_of(n - 1 - i);
    }
    const FitResult back = fit_profile_mle(validate_panel(rev),
                                           {gaussian_fixed_scale(K), GroupMap(reversed_groups, G), std::nullopt});
    CHECK(rel_gap(back.theta_hat, prof.theta_hat) <= 1e-8);
    CHECK(rel_gap(back.gamma_hat, prof.gamma_hat) <= 1e-8);
    CHECK(back.loglik == doctest::Approx(prof.loglik).epsilon(1e-10));
  }
}
