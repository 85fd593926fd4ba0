#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "panelvuong/likelihood.hpp"
#include "panelvuong/panel.hpp"

namespace panelvuong {

// One competing model: likelihood family plus known unit and time groupings.
struct ModelSpec {
  LikelihoodFamily family;
  GroupMap gmap;
  std::optional<TimeGroupMap> mmap;  // single block when absent

  TimeGroupMap time_blocks(std::size_t T) const { return mmap ? *mmap : TimeGroupMap::single(T); }
};

struct FitResult {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd gamma_hat;   // G x M
  double loglik = 0.0;         // sum of psi at the estimate
  Eigen::VectorXd psi;         // per observation, obs = i * T + t
  Eigen::VectorXd score_gamma; // per observation psi_gamma
  Eigen::MatrixXd info_gamma;  // G x M cell means of psi_gammagamma
  double foc_theta = 0.0;      // |sum psi_theta|_inf
  double foc_gamma = 0.0;      // max over cells |sum psi_gamma|
  bool converged = false;
  int iterations = 0;
};

struct ProfileOptions {
  double tol = 1e-10;
  int max_iter = 100;
  double inner_tol = 1e-12;
  int max_inner_iter = 100;
  int max_halvings = 30;
};

// Quasi-MLE by profile Newton. Each cell's gamma solves its scalar first-order
// condition by safeguarded Newton; theta takes Newton steps on the profiled
// score with a finite-difference profiled Hessian and step halving.
// Throws SingularInformation, NoConvergence, DomainError.
FitResult fit_profile_mle(const Panel& panel, const ModelSpec& spec, const ProfileOptions& opts = {});

// Closed-form least squares with gamma_{g(i), m(t)} cell effects; loglik and
// scores are those of the gaussian-fixed-scale family. Throws RankDeficient.
FitResult fit_linear_cells(const Panel& panel, const GroupMap& gmap, const TimeGroupMap& mmap);

struct GroupedTimeFit {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd gamma_gt;   // G x T
  Eigen::MatrixXd residuals;  // n x T
};

// y = x'theta + gamma_{g(i), t} + e.
GroupedTimeFit fit_grouped_time(const Panel& panel, const GroupMap& gmap);

struct TwfeFit {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd alpha;      // unit effects
  Eigen::VectorXd delta;      // time effects, summing to zero
  Eigen::MatrixXd residuals;  // n x T
};

// y = x'theta + alpha_i + delta_t + e with sum_t delta_t = 0.
TwfeFit fit_twfe(const Panel& panel);

namespace detail {
// Solves gram * b = rhs for a symmetric positive-definite gram. Throws
// RankDeficient when the condition number exceeds 1e12 or the smallest
// eigenvalue of gram / scale is below 1e-12.
Eigen::VectorXd solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, double scale);
}  // namespace detail

}  // namespace panelvuong
