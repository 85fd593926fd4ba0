#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "panelvuong/error.hpp"
#include "panelvuong/vuong_twfe.hpp"

using namespace panelvuong;

namespace {

// sigma2_u regrouped: own-unit term, cross-group products of model-2
// variances, and one nonnegative square per group.
double sigma2_u_regrouped(const Eigen::MatrixXd& e1, const Eigen::MatrixXd& e2, const GroupMap& gmap) {
  const double n = static_cast<double>(e1.rows()), T = static_cast<double>(e1.cols());
  std::vector<double> A(gmap.G(), 0.0), B(gmap.G(), 0.0), C(gmap.G(), 0.0);
  double own = 0.0;
  for (Eigen::Index i = 0; i < e1.rows(); ++i) {
    const std::size_t g = gmap.group_of(static_cast<std::size_t>(i));
    const double s1 = e1.row(i).squaredNorm() / T, s2 = e2.row(i).squaredNorm() / T;
    A[g] += s1;
    B[g] += s2;
    C[g] += e1.row(i).dot(e2.row(i)) / T;
    own += s2 * s2;
  }
  double pairs = 0.0, squares = 0.0;
  for (std::size_t g = 0; g < gmap.G(); ++g) {
    const double ng = static_cast<double>(gmap.size_of(g));
    for (std::size_t h = 0; h < g; ++h) pairs += B[g] * B[h];
    squares += A[g] * A[g] / (ng * ng) + B[g] * B[g] / (n * n) - 2.0 * C[g] * C[g] / (ng * n);
  }
  return own / (2.0 * n * T) + pairs / (n * n * n) + squares / (2.0 * n);
}

Panel additive_panel(std::size_t n, std::size_t T, Stream& rng, double noise) {
  PanelInput raw;
  raw.y.assign(n, std::vector<double>(T));
  raw.x.assign(1, Rows(n, std::vector<double>(T)));
  std::vector<double> a(n), b(T);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      raw.x[0][i][t] = rng.normal();
      raw.y[i][t] = 0.8 * raw.x[0][i][t] + a[i] + b[t] + noise * rng.normal();
    }
  }
  return validate_panel(raw);
}

}  // namespace

TEST_CASE("residuals and zero-sum identities") {
  Stream rng(61, 0, 0);
  SUBCASE("additive truth without noise") {
    const Panel p = additive_panel(6, 5, rng, 0.0);
    const GroupMap gmap = GroupMap::balanced(6, 2);
    CHECK(residuals(p, fit_twfe(p)).cwiseAbs().maxCoeff() <= 1e-12);
    // Unit effects are not constant within groups, so the grouped model leaves residuals.
    CHECK(residuals(p, fit_grouped_time(p, gmap), gmap).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("saturated grouping without covariates") {
    const Panel p = oracle::random_panel(5, 4, 0, rng);
    const GroupMap all = GroupMap::individual(5);
    CHECK(residuals(p, fit_grouped_time(p, all), all).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("saturated grouping with a covariate has no within variation") {
    const Panel p = oracle::random_panel(5, 4, 1, rng);
    try {
      fit_grouped_time(p, GroupMap::individual(5));
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
    }
  }
  SUBCASE("random panels") {
    for (int rep = 0; rep < 30; ++rep) {
      const std::size_t n = oracle::random_int(3, 25, rng), T = oracle::random_int(2, 25, rng);
      const Panel p = oracle::random_panel(n, T, 1, rng);
      const GroupMap gmap = oracle::random_groups(n, oracle::random_int(1, n - 1, rng), rng);
      const GroupedTimeFit f1 = fit_grouped_time(p, gmap);
      const Eigen::MatrixXd e1 = residuals(p, f1, gmap), e2 = residuals(p, fit_twfe(p));
      CHECK((e1 - f1.residuals).cwiseAbs().maxCoeff() <= 1e-13);
      const double s1 = std::max(1.0, e1.cwiseAbs().maxCoeff()), s2 = std::max(1.0, e2.cwiseAbs().maxCoeff());
      for (std::size_t g = 0; g < gmap.G(); ++g) {
        for (std::size_t t = 0; t < T; ++t) {
          double s = 0.0;
          for (std::size_t i : gmap.members(g)) s += e1(i, t);
          CHECK(std::abs(s) <= 1e-12 * s1 * gmap.size_of(g));
        }
      }
      CHECK(e2.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * s2 * T);
      CHECK(e2.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * s2 * n);
    }
  }
}

TEST_CASE("quasi-likelihood ratio") {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd e2 = (Eigen::MatrixXd(2, 2) << 2, 0, 0, 2).finished();  // sum of squares 8
  CHECK(qlr_twfe(zero, e2) == 2.0);
  CHECK(qlr_twfe(e2, zero) == -2.0);
  CHECK(qlr_twfe(e2, e2) == 0.0);
}

TEST_CASE("bias estimate") {
  SUBCASE("equal unit variances, n = T") {
    // T / n_g = G and 1 + T / n = 2, so the sum is n (G - 2); the prefactor is (nT)^{-1/2} / 2.
    for (std::size_t G : {2u, 4u, 5u, 10u}) {
      const std::size_t n = 20;
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
      CHECK(bias_hat(ones, ones, GroupMap::balanced(n, G), n) ==
            doctest::Approx((static_cast<double>(G) - 2.0) / 2.0).epsilon(1e-14));
    }
  }
  SUBCASE("symmetric case n = T = 4, G = 2") {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    CHECK(bias_hat(ones, ones, GroupMap::balanced(4, 2), 4) == 0.0);
  }
  SUBCASE("zero residuals") {
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(6);
    CHECK(bias_hat(z, z, GroupMap::balanced(6, 3), 5) == 0.0);
  }
}

TEST_CASE("variance components") {
  Stream rng(62, 0, 0);
  SUBCASE("zero residuals") {
    const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(4, 3);
    const TwfeVariance v = variance_components_twfe(z, z, 0.0, GroupMap::balanced(4, 2));
    CHECK(v.sigma2 == 0.0);
    CHECK(v.sigma2_u == 0.0);
  }
  SUBCASE("identical residuals") {
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = oracle::random_int(2, 20, rng), T = oracle::random_int(2, 20, rng);
      Eigen::MatrixXd e(n, T);
      for (Eigen::Index k = 0; k < e.size(); ++k) e.data()[k] = rng.normal();
      const GroupMap gmap = oracle::random_groups(n, oracle::random_int(1, n, rng), rng);
      const TwfeUnitMoments m = unit_moments(e, e);
      CHECK((m.sigma12 - m.sigma2_1).cwiseAbs().maxCoeff() == 0.0);
      CHECK((m.sigma2_2 - m.sigma2_1).cwiseAbs().maxCoeff() == 0.0);
      const TwfeVariance v = variance_components_twfe(e, e, 0.0, gmap);
      CHECK(v.sigma2 == 0.0);
      CHECK(v.sigma2_u >= sigma2_u_lower_bound(m.sigma2_2, gmap, T) * (1.0 - 1e-12));
      CHECK(std::abs(v.sigma2_u - sigma2_u_regrouped(e, e, gmap)) <= 1e-12 * std::max(1.0, v.sigma2_u));
    }
  }
  SUBCASE("direct and regrouped forms agree, n = T = 40") {
    for (int rep = 0; rep < 5; ++rep) {
      const Panel p = oracle::random_panel(40, 40, 1, rng);
      const GroupMap gmap = oracle::random_groups(40, oracle::random_int(1, 20, rng), rng);
      const TestReport r = run_twfe_test(p, gmap, 0.05);
      const auto& c = std::get<TwfeComponents>(r.components);
      const double alt = sigma2_u_regrouped(c.resid1, c.resid2, gmap);
      CHECK(std::abs(c.sigma2_u - alt) <= 1e-12 * std::max(1.0, std::abs(alt)));
      CHECK(c.sigma2_u >= sigma2_u_lower_bound(c.sigma2_2, gmap, 40) - 1e-14);
    }
  }
}

TEST_CASE("hybrid variance rule") {
  CHECK(omega2_twfe(1.0, 0.3) == doctest::Approx(0.7));
  CHECK(omega2_twfe(0.1, 0.3) == 0.3);
  CHECK(omega2_twfe(0.0, 0.0) == 0.0);
}

TEST_CASE("saturated grouping on a small noisy panel") {
  const Panel p = validate_panel(PanelInput{{{0.3, -1.1, 0.8}, {2.0, 0.4, -0.2}, {0.9, 1.7, -0.6}}, {}});
  const TestReport r = run_twfe_test(p, GroupMap::individual(3), 0.05);
  const auto& c = std::get<TwfeComponents>(r.components);
  CHECK(c.resid1.cwiseAbs().maxCoeff() <= 1e-15);
  // QLR = sum e2^2 / (2 * 3); bias = [3 * sum s2_1 - 2 * sum s2_2] / 6 with s2_1 = 0.
  const double ss2 = c.resid2.squaredNorm();
  CHECK(c.qlr == doctest::Approx(ss2 / 6.0).epsilon(1e-14));
  CHECK(c.bias == doctest::Approx(-2.0 * ss2 / 3.0 / 6.0).epsilon(1e-14));
  CHECK(std::isfinite(c.mqlr));
  CHECK(std::isfinite(c.omega2));
  CHECK(r.statistic.has_value());
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("positivity on random panels") {
  Stream rng(63, 0, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = oracle::random_int(3, 40, rng), T = oracle::random_int(3, 40, rng);
    const std::size_t K = oracle::random_int(0, 2, rng);
    const Panel p = oracle::random_panel(n, T, K, rng);
    const GroupMap gmap = oracle::random_groups(n, oracle::random_int(1, K > 0 ? n - 1 : n, rng), rng);
    const TestReport r = run_twfe_test(p, gmap, 0.05);
    const auto& c = std::get<TwfeComponents>(r.components);
    CHECK(c.sigma2_u >= -1e-14);
    CHECK(c.sigma2_u >= sigma2_u_lower_bound(c.sigma2_2, gmap, T) - 1e-14 * std::max(1.0, c.sigma2_u));
    CHECK(c.omega2 >= c.sigma2_u);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(c.sigma12[i] * c.sigma12[i] <= c.sigma2_1[i] * c.sigma2_2[i] * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("permuting time leaves the statistic unchanged; raw ratio is antisymmetric") {
  Stream rng(64, 0, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = oracle::random_int(4, 20, rng), T = oracle::random_int(3, 20, rng);
    const Panel p = oracle::random_panel(n, T, 1, rng);
    const GroupMap gmap = oracle::random_groups(n, oracle::random_int(1, n - 1, rng), rng);
    std::vector<std::size_t> perm(T);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t k = T; k-- > 1;) std::swap(perm[k], perm[static_cast<std::size_t>(rng.uniform() * (k + 1))]);
    PanelInput raw = p.to_input(), shuffled = raw;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < T; ++t) {
        shuffled.y[i][t] = raw.y[i][perm[t]];
        shuffled.x[0][i][t] = raw.x[0][i][perm[t]];
      }
    }
    const TestReport a = run_twfe_test(p, gmap, 0.05);
    const TestReport b = run_twfe_test(validate_panel(shuffled), gmap, 0.05);
    const auto& ca = std::get<TwfeComponents>(a.components);
    const auto& cb = std::get<TwfeComponents>(b.components);
    for (auto [x, y] : {std::pair{ca.qlr, cb.qlr}, {ca.bias, cb.bias}, {ca.sigma2, cb.sigma2},
                        {ca.sigma2_u, cb.sigma2_u}}) {
      CHECK(std::abs(x - y) <= 1e-10 * std::max(1.0, std::abs(x)));
    }

    CHECK(qlr_twfe(ca.resid2, ca.resid1) == -ca.qlr);
    // The bias term is not antisymmetric, so neither is the corrected statistic.
    const TwfeUnitMoments m = unit_moments(ca.resid2, ca.resid1);
    const double swapped = qlr_twfe(ca.resid2, ca.resid1) - bias_hat(m.sigma2_1, m.sigma2_2, gmap, T);
    CHECK(std::abs(swapped + ca.mqlr) > 1e-8);
  }
}
