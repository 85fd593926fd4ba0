#include <cmath>
#include <vector>

#include "doctest.h"
#include "panelvuong/error.hpp"
#include "panelvuong/likelihood.hpp"
#include "panelvuong/rng.hpp"

using namespace panelvuong;

namespace {

std::vector<DerivativePoint> random_points(std::size_t K, bool with_scale, std::size_t count, Stream& rng) {
  std::vector<DerivativePoint> pts;
  for (std::size_t s = 0; s < count; ++s) {
    DerivativePoint p;
    p.y = 2.0 * rng.normal();
    for (std::size_t k = 0; k < K; ++k) {
      p.x.push_back(rng.normal());
      p.theta.push_back(rng.normal());
    }
    if (with_scale) p.theta.push_back(0.3 + 2.0 * rng.uniform());
    p.gamma = rng.normal();
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("psi values") {
  const LikelihoodFamily fixed0 = gaussian_fixed_scale(0);
  CHECK(eval_psi(fixed0, {1.0, {}}, {}, 1.0) == 0.0);
  const LikelihoodFamily fixed1 = gaussian_fixed_scale(1);
  const std::vector<double> x{1.0}, theta{1.0};
  CHECK(eval_psi(fixed1, {3.0, x}, theta, 0.0) == -2.0);
  const LikelihoodFamily full0 = gaussian_full_scale(0);
  const std::vector<double> s2{1.0};
  CHECK(eval_psi(full0, {0.5, {}}, s2, 0.5) == 0.0);
}

TEST_CASE("analytic derivatives") {
  const LikelihoodFamily fixed = gaussian_fixed_scale(1);
  const std::vector<double> x{2.0}, theta{0.5};
  // residual = 4 - 1 - 1 = 2
  Derivatives d = eval_derivatives(fixed, {4.0, x}, theta, 1.0);
  CHECK(d.gamma == 2.0);
  CHECK(d.gammagamma == -1.0);
  CHECK(d.theta[0] == 4.0);
  d = eval_derivatives(fixed, {2.0, x}, theta, 1.0);
  CHECK(d.gamma == 0.0);

  const LikelihoodFamily full = gaussian_full_scale(0);
  const std::vector<double> s2{2.0};
  d = eval_derivatives(full, {1.0, {}}, s2, 0.0);
  CHECK(d.gamma == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d.gammagamma == doctest::Approx(-0.5).epsilon(1e-15));
  // d/ds2 = -1/(2 s2) + r^2 / (2 s2^2) = -1/4 + 1/8
  CHECK(d.theta[0] == doctest::Approx(-0.125).epsilon(1e-15));
}

TEST_CASE("domain errors") {
  const LikelihoodFamily full = gaussian_full_scale(1);
  const std::vector<double> x{1.0};
  const std::vector<double> bad{1.0, 0.0}, neg{1.0, -1.0}, short_theta{1.0};
  CHECK_THROWS_AS(eval_psi(full, {1.0, x}, bad, 0.0), Error);
  CHECK_THROWS_AS(eval_derivatives(full, {1.0, x}, neg, 0.0), Error);
  CHECK_THROWS_AS(eval_psi(full, {1.0, x}, short_theta, 0.0), Error);
  try {
    eval_psi(full, {1.0, x}, neg, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
  CHECK_THROWS_AS(family_by_name("logit", 1), Error);
  CHECK(family_by_name("gaussian-full-scale", 2).d_theta == 3);
}

TEST_CASE("finite-difference self check") {
  Stream rng(21, 0, 0);
  for (std::size_t K : {0u, 1u, 3u}) {
    const auto fixed_pts = random_points(K, false, 100, rng);
    CHECK(check_derivatives(gaussian_fixed_scale(K), fixed_pts, 1e-5) < 1e-6);
    const auto full_pts = random_points(K, true, 100, rng);
    CHECK(check_derivatives(gaussian_full_scale(K), full_pts, 1e-5) < 1e-6);
  }

  SUBCASE("wrong gamma derivative is detected") {
    LikelihoodFamily broken = gaussian_fixed_scale(1);
    const auto good = broken.psi_gamma;
    broken.psi_gamma = [good](const Observation& z, ThetaView th, double g) { return 2.0 * good(z, th, g); };
    const auto pts = random_points(1, false, 20, rng);
    const double err = check_derivatives(broken, pts, 1e-5);
    CHECK(err > 0.3);
  }

  SUBCASE("zero residual points") {
    std::vector<DerivativePoint> pts{{1.0, {2.0}, {0.25}, 0.5}, {-1.0, {-4.0}, {0.5}, 1.0}};
    CHECK(check_derivatives(gaussian_fixed_scale(1), pts, 1e-5) < 1e-10);
  }
}

TEST_CASE("fixed-scale properties at random points") {
  Stream rng(22, 0, 0);
  const LikelihoodFamily f = gaussian_fixed_scale(2);
  for (int s = 0; s < 200; ++s) {
    const std::vector<double> x{rng.normal(), rng.normal()}, theta{rng.normal(), rng.normal()};
    const double y = rng.normal(), g = rng.normal();
    const Derivatives d = eval_derivatives(f, {y, x}, theta, g);
    CHECK(d.gammagamma == -1.0);
    CHECK(d.gamma == y - (x[0] * theta[0] + x[1] * theta[1]) - g);
  }
}

TEST_CASE("fixed-scale psi is maximized at the mean residual") {
  const LikelihoodFamily f = gaussian_fixed_scale(0);
  const std::vector<double> ys{0.3, -1.2, 2.5, 0.7};
  const double mean = (0.3 - 1.2 + 2.5 + 0.7) / 4.0;
  const auto total = [&](double g) {
    double s = 0.0;
    for (double y : ys) s += eval_psi(f, {y, {}}, {}, g);
    return s;
  };
  CHECK(total(mean) > total(mean + 1e-3));
  CHECK(total(mean) > total(mean - 1e-3));
}
