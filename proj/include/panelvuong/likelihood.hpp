#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace panelvuong {

class Panel;

// One panel cell z_{i,t}: outcome and its covariate row.
struct Observation {
  double y;
  std::span<const double> x;
};

using ThetaView = std::span<const double>;

// Per-observation quasi-log-likelihood psi(z; theta, gamma) with a scalar group
// effect gamma. The four derivative callables are mandatory; the remaining
// hooks have defaults suitable for families without domain restrictions.
struct LikelihoodFamily {
  std::string name;
  std::size_t d_theta = 0;

  std::function<double(const Observation&, ThetaView, double)> psi;
  // Writes d psi / d theta (length d_theta) into out.
  std::function<void(const Observation&, ThetaView, double, std::span<double> out)> psi_theta;
  std::function<double(const Observation&, ThetaView, double)> psi_gamma;
  std::function<double(const Observation&, ThetaView, double)> psi_gammagamma;

  // Optional. theta admissible? Default: always.
  std::function<bool(ThetaView)> in_domain;
  // Optional. Quantity whose cell mean seeds gamma. Default: y.
  std::function<double(const Observation&, ThetaView)> working_residual;
  // Optional. Starting theta from a pooled fit without group effects. Default: zeros.
  std::function<std::vector<double>(const Panel&)> initial_theta;

  bool admissible(ThetaView theta) const { return !in_domain || in_domain(theta); }
};

// psi = -(y - x'theta - gamma)^2 / 2, theta = beta (length K).
LikelihoodFamily gaussian_fixed_scale(std::size_t K);
// psi = -log(s2)/2 - (y - x'beta - gamma)^2 / (2 s2), theta = (beta, s2).
LikelihoodFamily gaussian_full_scale(std::size_t K);

// Looks up a shipped family by name; throws ConfigError when unknown.
LikelihoodFamily family_by_name(const std::string& name, std::size_t K);

// Checked evaluation: throws DomainError when theta is outside the family's
// domain or the value is not finite.
double eval_psi(const LikelihoodFamily& family, const Observation& z, ThetaView theta, double gamma);

struct Derivatives {
  std::vector<double> theta;
  double gamma = 0.0;
  double gammagamma = 0.0;
};

Derivatives eval_derivatives(const LikelihoodFamily& family, const Observation& z, ThetaView theta, double gamma);

struct DerivativePoint {
  double y;
  std::vector<double> x;
  std::vector<double> theta;
  double gamma;
};

// Largest gap between analytic derivatives and central differences over the
// sample. First derivatives are differenced from psi, the second gamma
// derivative from the analytic psi_gamma. Gap = |analytic - fd| / max(1, |fd|).
double check_derivatives(const LikelihoodFamily& family, std::span<const DerivativePoint> sample, double h);

}  // namespace panelvuong
