#include "panelvuong/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "panelvuong/error.hpp"
#include "panelvuong/panel.hpp"

namespace panelvuong {
namespace {

double linear_index(const Observation& z, ThetaView beta) {
  double s = 0.0;
  for (std::size_t k = 0; k < z.x.size(); ++k) s += z.x[k] * beta[k];
  return s;
}

// Pooled OLS of y on (1, x); appends the residual variance when with_scale.
std::vector<double> pooled_ols(const Panel& panel, bool with_scale) {
  const auto K = static_cast<Eigen::Index>(panel.K());
  const auto N = static_cast<Eigen::Index>(panel.size());
  Eigen::MatrixXd design(N, K + 1);
  design.col(0).setOnes();
  design.rightCols(K) = panel.x_matrix();
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(panel.y_vector());
  std::vector<double> theta(coef.data() + 1, coef.data() + coef.size());
  if (with_scale) {
    const double s2 = (panel.y_vector() - design * coef).squaredNorm() / static_cast<double>(N);
    theta.push_back(s2 > 0.0 ? s2 : 1.0);
  }
  return theta;
}

}  // namespace

LikelihoodFamily gaussian_fixed_scale(std::size_t K) {
  LikelihoodFamily f;
  f.name = "gaussian-fixed-scale";
  f.d_theta = K;
  f.psi = [](const Observation& z, ThetaView th, double g) {
    const double r = z.y - linear_index(z, th) - g;
    return -0.5 * r * r;
  };
  f.psi_theta = [](const Observation& z, ThetaView th, double g, std::span<double> out) {
    const double r = z.y - linear_index(z, th) - g;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = z.x[k] * r;
  };
  f.psi_gamma = [](const Observation& z, ThetaView th, double g) { return z.y - linear_index(z, th) - g; };
  f.psi_gammagamma = [](const Observation&, ThetaView, double) { return -1.0; };
  f.working_residual = [](const Observation& z, ThetaView th) { return z.y - linear_index(z, th); };
  f.initial_theta = [](const Panel& panel) { return pooled_ols(panel, false); };
  return f;
}

LikelihoodFamily gaussian_full_scale(std::size_t K) {
  LikelihoodFamily f;
  f.name = "gaussian-full-scale";
  f.d_theta = K + 1;
  // theta = (beta_1..beta_K, s2); the covariate row has length K.
  f.psi = [](const Observation& z, ThetaView th, double g) {
    const double s2 = th[z.x.size()];
    const double r = z.y - linear_index(z, th) - g;
    return -0.5 * std::log(s2) - r * r / (2.0 * s2);
  };
  f.psi_theta = [](const Observation& z, ThetaView th, double g, std::span<double> out) {
    const std::size_t K = z.x.size();
    const double s2 = th[K];
    const double r = z.y - linear_index(z, th) - g;
    for (std::size_t k = 0; k < K; ++k) out[k] = z.x[k] * r / s2;
    out[K] = -0.5 / s2 + r * r / (2.0 * s2 * s2);
  };
  f.psi_gamma = [](const Observation& z, ThetaView th, double g) {
    const double s2 = th[z.x.size()];
    return (z.y - linear_index(z, th) - g) / s2;
  };
  f.psi_gammagamma = [](const Observation& z, ThetaView th, double) { return -1.0 / th[z.x.size()]; };
  f.in_domain = [](ThetaView th) { return !th.empty() && th.back() > 0.0 && std::isfinite(th.back()); };
  f.working_residual = [](const Observation& z, ThetaView th) { return z.y - linear_index(z, th); };
  f.initial_theta = [](const Panel& panel) { return pooled_ols(panel, true); };
  return f;
}

LikelihoodFamily family_by_name(const std::string& name, std::size_t K) {
  if (name == "gaussian-fixed-scale") return gaussian_fixed_scale(K);
  if (name == "gaussian-full-scale") return gaussian_full_scale(K);
  throw Error(ErrorCode::ConfigError, "unknown likelihood family '" + name + "'");
}

double eval_psi(const LikelihoodFamily& family, const Observation& z, ThetaView theta, double gamma) {
  if (theta.size() != family.d_theta || !family.admissible(theta)) {
    throw Error(ErrorCode::DomainError, family.name + ": theta outside the admissible domain");
  }
  const double v = family.psi(z, theta, gamma);
  if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, family.name + ": psi is not finite");
  return v;
}

Derivatives eval_derivatives(const LikelihoodFamily& family, const Observation& z, ThetaView theta, double gamma) {
  if (theta.size() != family.d_theta || !family.admissible(theta)) {
    throw Error(ErrorCode::DomainError, family.name + ": theta outside the admissible domain");
  }
  Derivatives d;
  d.theta.resize(family.d_theta);
  family.psi_theta(z, theta, gamma, d.theta);
  d.gamma = family.psi_gamma(z, theta, gamma);
  d.gammagamma = family.psi_gammagamma(z, theta, gamma);
  const bool finite = std::isfinite(d.gamma) && std::isfinite(d.gammagamma) &&
                      std::all_of(d.theta.begin(), d.theta.end(), [](double v) { return std::isfinite(v); });
  if (!finite) throw Error(ErrorCode::DomainError, family.name + ": derivative is not finite");
  return d;
}

double check_derivatives(const LikelihoodFamily& family, std::span<const DerivativePoint> sample, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::DomainError, "finite-difference step must be positive");
  const auto gap = [](double analytic, double fd) { return std::abs(analytic - fd) / std::max(1.0, std::abs(fd)); };

  double worst = 0.0;
  for (const DerivativePoint& p : sample) {
    const Observation z{p.y, p.x};
    const Derivatives an = eval_derivatives(family, z, p.theta, p.gamma);

    const double fd_gamma =
        (eval_psi(family, z, p.theta, p.gamma + h) - eval_psi(family, z, p.theta, p.gamma - h)) / (2.0 * h);
    worst = std::max(worst, gap(an.gamma, fd_gamma));

    const double fd_gg = (family.psi_gamma(z, p.theta, p.gamma + h) - family.psi_gamma(z, p.theta, p.gamma - h)) /
                         (2.0 * h);
    worst = std::max(worst, gap(an.gammagamma, fd_gg));

    std::vector<double> up = p.theta;
    std::vector<double> dn = p.theta;
    for (std::size_t k = 0; k < family.d_theta; ++k) {
      const double step = h * std::max(1.0, std::abs(p.theta[k]));
      up[k] = p.theta[k] + step;
      dn[k] = p.theta[k] - step;
      const double fd = (eval_psi(family, z, up, p.gamma) - eval_psi(family, z, dn, p.gamma)) / (2.0 * step);
      worst = std::max(worst, gap(an.theta[k], fd));
      up[k] = dn[k] = p.theta[k];
    }
  }
  return worst;
}

}  // namespace panelvuong
