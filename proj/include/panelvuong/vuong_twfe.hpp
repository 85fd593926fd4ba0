#pragma once

#include <Eigen/Dense>

#include "panelvuong/estimation.hpp"
#include "panelvuong/panel.hpp"
#include "panelvuong/report.hpp"

namespace panelvuong {

// y - x'theta - fitted effects, n x T.
Eigen::MatrixXd residuals(const Panel& panel, const GroupedTimeFit& fit, const GroupMap& gmap);
Eigen::MatrixXd residuals(const Panel& panel, const TwfeFit& fit);

// (nT)^{-1/2} sum (e2^2 - e1^2) / 2. Positive favors model 1.
double qlr_twfe(const Eigen::MatrixXd& resid1, const Eigen::MatrixXd& resid2);

struct TwfeUnitMoments {
  Eigen::VectorXd sigma2_1, sigma2_2, sigma12;  // T^{-1} sum_t of e1^2, e2^2, e1 e2
};
TwfeUnitMoments unit_moments(const Eigen::MatrixXd& resid1, const Eigen::MatrixXd& resid2);

// Estimated mean of the incidental-parameter term in the QLR:
// (nT)^{-1/2} / 2 * sum_g sum_{i in g} [T/n_g sigma2_1 - (1 + T/n) sigma2_2].
double bias_hat(const Eigen::VectorXd& sigma2_1, const Eigen::VectorXd& sigma2_2, const GroupMap& gmap,
                std::size_t T);

struct TwfeVariance {
  double sigma2 = 0.0;
  double sigma2_u = 0.0;
};

TwfeVariance variance_components_twfe(const Eigen::MatrixXd& resid1, const Eigen::MatrixXd& resid2, double mqlr,
                                      const GroupMap& gmap);

// (2nT)^{-1} sum sigma2_2^2 + n^{-3} sum_{g > g'} S_g S_g', S_g = sum_{i in g} sigma2_2.
// sigma2_u never falls below this.
double sigma2_u_lower_bound(const Eigen::VectorXd& sigma2_2, const GroupMap& gmap, std::size_t T);

// max(sigma2 - sigma2_u, sigma2_u).
double omega2_twfe(double sigma2, double sigma2_u);

// Grouped-time-effects model (model 1, groups gmap) against the additive
// two-way model (model 2).
TestReport run_twfe_test(const Panel& panel, const GroupMap& gmap, double level);

}  // namespace panelvuong
