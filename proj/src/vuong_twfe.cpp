#include "panelvuong/vuong_twfe.hpp"

#include <algorithm>
#include <cmath>

#include "panelvuong/error.hpp"

namespace panelvuong {
namespace {

std::size_t smallest_group(const GroupMap& gmap) {
  std::size_t smallest = gmap.n();
  for (std::size_t g = 0; g < gmap.G(); ++g) smallest = std::min(smallest, gmap.size_of(g));
  return smallest;
}

}  // namespace

Eigen::MatrixXd residuals(const Panel& panel, const GroupedTimeFit& fit, const GroupMap& gmap) {
  const RowMatrix& X = panel.x_matrix();
  Eigen::MatrixXd e(panel.n(), panel.T());
  for (std::size_t i = 0; i < panel.n(); ++i) {
    const auto g = static_cast<Eigen::Index>(gmap.group_of(i));
    for (std::size_t t = 0; t < panel.T(); ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      e(i, t) = panel.y(i, t) - X.row(o).dot(fit.theta_hat) - fit.gamma_gt(g, t);
    }
  }
  return e;
}

Eigen::MatrixXd residuals(const Panel& panel, const TwfeFit& fit) {
  const RowMatrix& X = panel.x_matrix();
  Eigen::MatrixXd e(panel.n(), panel.T());
  for (std::size_t i = 0; i < panel.n(); ++i) {
    for (std::size_t t = 0; t < panel.T(); ++t) {
      const auto o = static_cast<Eigen::Index>(panel.obs(i, t));
      e(i, t) = panel.y(i, t) - X.row(o).dot(fit.theta_hat) - fit.alpha[i] - fit.delta[t];
    }
  }
  return e;
}

double qlr_twfe(const Eigen::MatrixXd& resid1, const Eigen::MatrixXd& resid2) {
  const double nT = static_cast<double>(resid1.size());
  return 0.5 * (resid2.squaredNorm() - resid1.squaredNorm()) / std::sqrt(nT);
}

TwfeUnitMoments unit_moments(const Eigen::MatrixXd& resid1, const Eigen::MatrixXd& resid2) {
  const double T = static_cast<double>(resid1.cols());
  TwfeUnitMoments m;
  m.sigma2_1 = resid1.rowwise().squaredNorm() / T;
  m.sigma2_2 = resid2.rowwise().squaredNorm() / T;
  m.sigma12 = resid1.cwiseProduct(resid2).rowwise().sum() / T;
  return m;
}

double bias_hat(const Eigen::VectorXd& sigma2_1, const Eigen::VectorXd& sigma2_2, const GroupMap& gmap,
                std::size_t T) {
  const double n = static_cast<double>(gmap.n());
  const double Td = static_cast<double>(T);
  double s = 0.0;
  for (std::size_t g = 0; g < gmap.G(); ++g) {
    const double ng = static_cast<double>(gmap.size_of(g));
    for (std::size_t i : gmap.members(g)) {
      const auto ii = static_cast<Eigen::Index>(i);
      s += Td / ng * sigma2_1[ii] - (1.0 + Td / n) * sigma2_2[ii];
    }
  }
  return 0.5 * s / std::sqrt(n * Td);
}

TwfeVariance variance_components_twfe(const Eigen::MatrixXd& resid1, const Eigen::MatrixXd& resid2, double mqlr,
                                      const GroupMap& gmap) {
  const double n = static_cast<double>(resid1.rows());
  const double T = static_cast<double>(resid1.cols());
  const TwfeUnitMoments m = unit_moments(resid1, resid2);

  TwfeVariance v;
  const Eigen::ArrayXXd diff = resid2.array().square() - resid1.array().square();
  v.sigma2 = diff.square().sum() / (4.0 * n * T) - mqlr * mqlr / (n * T);

  double own = 0.0, cross = 0.0;
  for (std::size_t g = 0; g < gmap.G(); ++g) {
    const double ng = static_cast<double>(gmap.size_of(g));
    double a = 0.0, c = 0.0;
    for (std::size_t i : gmap.members(g)) {
      a += m.sigma2_1[static_cast<Eigen::Index>(i)];
      c += m.sigma12[static_cast<Eigen::Index>(i)];
    }
    own += a * a / (ng * ng);
    cross += c * c / ng;
  }
  const double total2 = m.sigma2_2.sum();
  v.sigma2_u = m.sigma2_2.squaredNorm() / (2.0 * n * T) + own / (2.0 * n) + total2 * total2 / (2.0 * n * n * n) -
               cross / (n * n);
  return v;
}

double sigma2_u_lower_bound(const Eigen::VectorXd& sigma2_2, const GroupMap& gmap, std::size_t T) {
  const double n = static_cast<double>(gmap.n());
  double pairs = 0.0, before = 0.0;
  for (std::size_t g = 0; g < gmap.G(); ++g) {
    double s = 0.0;
    for (std::size_t i : gmap.members(g)) s += sigma2_2[static_cast<Eigen::Index>(i)];
    pairs += s * before;
    before += s;
  }
  return sigma2_2.squaredNorm() / (2.0 * n * static_cast<double>(T)) + pairs / (n * n * n);
}

double omega2_twfe(double sigma2, double sigma2_u) { return std::max(sigma2 - sigma2_u, sigma2_u); }

TestReport run_twfe_test(const Panel& panel, const GroupMap& gmap, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::OutOfRange, "level must lie in (0, 1)");
  if (gmap.n() != panel.n()) throw Error(ErrorCode::OutOfRange, "grouping does not cover the panel");

  const GroupedTimeFit f1 = fit_grouped_time(panel, gmap);
  const TwfeFit f2 = fit_twfe(panel);

  TwfeComponents c;
  c.resid1 = f1.residuals;
  c.resid2 = f2.residuals;
  const TwfeUnitMoments m = unit_moments(c.resid1, c.resid2);
  c.sigma2_1 = m.sigma2_1;
  c.sigma2_2 = m.sigma2_2;
  c.sigma12 = m.sigma12;
  c.qlr = qlr_twfe(c.resid1, c.resid2);
  c.bias = bias_hat(c.sigma2_1, c.sigma2_2, gmap, panel.T());
  c.mqlr = c.qlr - c.bias;
  const TwfeVariance v = variance_components_twfe(c.resid1, c.resid2, c.mqlr, gmap);
  c.sigma2 = v.sigma2;
  c.sigma2_u = v.sigma2_u;
  c.omega2 = omega2_twfe(v.sigma2, v.sigma2_u);

  TestReport report;
  report.test = "twfe";
  report.qlr_raw = c.qlr;
  report.notes.push_back("errors assumed serially uncorrelated with time-invariant second moments");
  if (gmap.is_individual()) {
    report.warnings.push_back("grouping is saturated (G = n): group sizes do not grow, so the limit theory does not apply");
  } else if (smallest_group(gmap) == 1) {
    report.warnings.push_back("some groups have a single unit; the bias estimate is dominated by them");
  }
  decide(report, c.mqlr, c.omega2, level);
  if (!report.degenerate) {
    if (c.sigma2 < 0.0) report.warnings.push_back("sample variance of the loglik difference is negative");
    if (v.sigma2 - v.sigma2_u < v.sigma2_u) {
      report.warnings.push_back("hybrid variance floor binds: omega^2 set to the incidental-parameter term");
    }
  }
  report.components = std::move(c);
  return report;
}

}  // namespace panelvuong
