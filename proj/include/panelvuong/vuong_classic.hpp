#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "panelvuong/estimation.hpp"
#include "panelvuong/panel.hpp"
#include "panelvuong/report.hpp"

namespace panelvuong {

// A converged fit together with the unit grouping it was estimated under.
struct GroupedFit {
  const FitResult& fit;
  const GroupMap& gmap;
};

// Per-unit score variance over |information of the unit's group|:
// (mean_t psi_gamma^2 - (mean_t psi_gamma)^2) / |Psi_gg|. Throws SingularInformation.
double sigma2_gamma_unit(const GroupedFit& m, std::size_t T, std::size_t i);

// Same without demeaning the scores.
double s2_gamma_unit(const GroupedFit& m, std::size_t T, std::size_t i);

// (mean_t psi_1gamma psi_2gamma)^2 / |Psi_1gg(unit) Psi_2gg(group of i)|.
// Model 1 satisfies mean_t psi_1gamma = 0 per unit at its optimum, so the cross
// moment is taken about both unit means; this is the same quantity up to the
// first-order-condition residual and keeps Cauchy-Schwarz exact.
double sigma2_cross_unit(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, std::size_t i);

// sum_g sum_{i in g} sigma2[i] / (2 n_g).
double bias_correction(const Eigen::VectorXd& sigma2, const GroupMap& gmap);

// (nT)^{-1/2} [(L1 - R1) - (L2 - R2)]. Model 1 must be the individual-effect
// model; otherwise GroupingViolation.
double mqlr_classic(const GroupedFit& m1, const GroupedFit& m2, std::size_t T);

struct ClassicVariance {
  double sigma2 = 0.0;
  double sigma2_u = 0.0;
  double sigma2_s = 0.0;
};

// Sample variance of the per-observation loglik difference and the two
// incidental-parameter variance terms, from per-unit quantities.
ClassicVariance variance_components(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, double mqlr);

// max(sigma2 + sigma2_u - 2 sigma2_s, sigma2_u).
double omega2_hybrid(double sigma2, double sigma2_u, double sigma2_s);

// Full test: fits both models by profile quasi-MLE, forms components and decisions.
TestReport run_classic_test(const Panel& panel, const ModelSpec& spec1, const ModelSpec& spec2, double level,
                            const ProfileOptions& opts = {});

// Same from already fitted models on the same panel.
TestReport classic_test_from_fits(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, double level);

}  // namespace panelvuong
