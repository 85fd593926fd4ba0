#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace panelvuong {

// Relative threshold below which omega^2 is treated as zero.
inline constexpr double kDegenerateTol = 1e-14;

struct ClassicComponents {
  // Per unit, indexed by i.
  Eigen::VectorXd sigma2_1;   // model-1 score variance over |information|
  Eigen::VectorXd sigma2_2;   // model-2, demeaned
  Eigen::VectorXd s2_2;       // model-2, not demeaned
  Eigen::VectorXd sigma2_12;  // squared cross moment over both informations
  double R1 = 0.0, R2 = 0.0;  // bias corrections
  double L1 = 0.0, L2 = 0.0;  // maximized quasi-log-likelihoods
  double mqlr = 0.0;
  double sigma2 = 0.0;        // sample variance of the loglik difference
  double sigma2_u = 0.0;
  double sigma2_s = 0.0;
  double omega2 = 0.0;
};

struct TwfeComponents {
  Eigen::MatrixXd resid1, resid2;  // n x T; model 1 grouped-time, model 2 two-way
  Eigen::VectorXd sigma2_1, sigma2_2, sigma12;
  double bias = 0.0;
  double qlr = 0.0;
  double mqlr = 0.0;
  double sigma2 = 0.0;
  double sigma2_u = 0.0;
  double omega2 = 0.0;
};

struct TestReport {
  std::string test;  // "classic" or "twfe"
  double level = 0.05;
  double mqlr = 0.0;
  double omega2_hat = 0.0;
  double qlr_raw = 0.0;  // uncorrected statistic, same scale as mqlr

  // Empty when the comparison is degenerate.
  std::optional<double> statistic;
  std::optional<double> p_two_sided;
  std::optional<double> p_one_sided;
  std::optional<bool> reject_two;
  std::optional<bool> reject_one;

  bool degenerate = false;
  std::string degenerate_reason;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;  // maintained assumptions

  std::variant<ClassicComponents, TwfeComponents> components;
};

// Fills statistic, p-values and decisions from (mqlr, omega2) at the given
// level, or marks the report degenerate. Throws OutOfRange unless 0 < level < 1.
void decide(TestReport& report, double mqlr, double omega2, double level);

}  // namespace panelvuong
