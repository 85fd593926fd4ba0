#include "panelvuong/vuong_classic.hpp"

#include <cmath>
#include <string>

#include "panelvuong/error.hpp"

namespace panelvuong {
namespace {

constexpr double kInfoFloor = 1e-12;

void check_time_blocks(const FitResult& fit) {
  if (fit.gamma_hat.cols() != 1) {
    throw Error(ErrorCode::GroupingViolation, "the classic test needs time-invariant group effects (one time block)");
  }
}

double unit_information(const GroupedFit& m, std::size_t i) {
  const double raw = m.fit.info_gamma(static_cast<Eigen::Index>(m.gmap.group_of(i)), 0);
  if (!(raw < 0.0)) {
    throw Error(ErrorCode::SingularInformation, "group effect of unit " + std::to_string(i + 1) +
                                                    " is not at a local maximum");
  }
  const double info = std::abs(raw);
  if (!(info >= kInfoFloor) || !std::isfinite(info)) {
    throw Error(ErrorCode::SingularInformation, "group-effect information of unit " + std::to_string(i + 1) +
                                                    " is " + std::to_string(info));
  }
  return info;
}

// Unit i's scores in model m as a contiguous segment.
Eigen::VectorXd::ConstSegmentReturnType unit_scores(const GroupedFit& m, std::size_t T, std::size_t i) {
  return m.fit.score_gamma.segment(static_cast<Eigen::Index>(i * T), static_cast<Eigen::Index>(T));
}

void check_pair(const GroupedFit& m1, const GroupedFit& m2, std::size_t T) {
  const std::size_t n = m1.gmap.n();
  if (m2.gmap.n() != n || static_cast<std::size_t>(m1.fit.score_gamma.size()) != n * T ||
      m2.fit.score_gamma.size() != m1.fit.score_gamma.size()) {
    throw Error(ErrorCode::OutOfRange, "the two fits do not cover the same panel");
  }
  if (!m1.gmap.is_individual()) {
    throw Error(ErrorCode::GroupingViolation, "model 1 must carry one effect per unit (G1 = n), got G1 = " +
                                                  std::to_string(m1.gmap.G()));
  }
  check_time_blocks(m1.fit);
  check_time_blocks(m2.fit);
}

}  // namespace

double sigma2_gamma_unit(const GroupedFit& m, std::size_t T, std::size_t i) {
  check_time_blocks(m.fit);
  const auto s = unit_scores(m, T, i);
  const double mean = s.mean();
  const double var = (s.array() - mean).square().mean();
  return var / unit_information(m, i);
}

double s2_gamma_unit(const GroupedFit& m, std::size_t T, std::size_t i) {
  check_time_blocks(m.fit);
  return unit_scores(m, T, i).squaredNorm() / static_cast<double>(T) / unit_information(m, i);
}

double sigma2_cross_unit(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, std::size_t i) {
  check_time_blocks(m1.fit);
  check_time_blocks(m2.fit);
  const auto s1 = unit_scores(m1, T, i);
  const auto s2 = unit_scores(m2, T, i);
  const double cross = ((s1.array() - s1.mean()) * (s2.array() - s2.mean())).mean();
  return cross * cross / (unit_information(m1, i) * unit_information(m2, i));
}

double bias_correction(const Eigen::VectorXd& sigma2, const GroupMap& gmap) {
  double r = 0.0;
  for (std::size_t g = 0; g < gmap.G(); ++g) {
    double s = 0.0;
    for (std::size_t i : gmap.members(g)) s += sigma2[static_cast<Eigen::Index>(i)];
    r += s / (2.0 * static_cast<double>(gmap.size_of(g)));
  }
  return r;
}

namespace {

struct UnitQuantities {
  Eigen::VectorXd sigma2_1, sigma2_2, s2_2, sigma2_12;
};

UnitQuantities unit_quantities(const GroupedFit& m1, const GroupedFit& m2, std::size_t T) {
  const auto n = static_cast<Eigen::Index>(m1.gmap.n());
  UnitQuantities q;
  q.sigma2_1.resize(n);
  q.sigma2_2.resize(n);
  q.s2_2.resize(n);
  q.sigma2_12.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    q.sigma2_1[i] = sigma2_gamma_unit(m1, T, u);
    q.sigma2_2[i] = sigma2_gamma_unit(m2, T, u);
    q.s2_2[i] = s2_gamma_unit(m2, T, u);
    q.sigma2_12[i] = sigma2_cross_unit(m1, m2, T, u);
  }
  return q;
}

double mqlr_from(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, const UnitQuantities& q, double& R1,
                 double& R2) {
  R1 = bias_correction(q.sigma2_1, m1.gmap);
  R2 = bias_correction(q.sigma2_2, m2.gmap);
  const double nT = static_cast<double>(m1.gmap.n() * T);
  return ((m1.fit.loglik - R1) - (m2.fit.loglik - R2)) / std::sqrt(nT);
}

// (2nT)^{-1} sum_g sum_{i in g} (s1_i^2 + n_g^{-2} s2_i sum_{i' in g} pool_{i'} - 2 n_g^{-1} s12_i).
double incidental_variance(const Eigen::VectorXd& sigma2_1, const Eigen::VectorXd& sigma2_2,
                           const Eigen::VectorXd& pool, const Eigen::VectorXd& sigma2_12, const GroupMap& gmap,
                           std::size_t T) {
  double total = 0.0;
  for (std::size_t g = 0; g < gmap.G(); ++g) {
    const double ng = static_cast<double>(gmap.size_of(g));
    double pooled = 0.0;
    for (std::size_t i : gmap.members(g)) pooled += pool[static_cast<Eigen::Index>(i)];
    for (std::size_t i : gmap.members(g)) {
      const auto ii = static_cast<Eigen::Index>(i);
      total += sigma2_1[ii] * sigma2_1[ii] + sigma2_2[ii] * pooled / (ng * ng) - 2.0 * sigma2_12[ii] / ng;
    }
  }
  return total / (2.0 * static_cast<double>(gmap.n() * T));
}

ClassicVariance variance_from(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, double mqlr,
                              const UnitQuantities& q) {
  const double nT = static_cast<double>(m1.gmap.n() * T);
  ClassicVariance v;
  v.sigma2 = (m1.fit.psi - m2.fit.psi).squaredNorm() / nT - mqlr * mqlr / nT;
  v.sigma2_u = incidental_variance(q.sigma2_1, q.sigma2_2, q.sigma2_2, q.sigma2_12, m2.gmap, T);
  v.sigma2_s = incidental_variance(q.sigma2_1, q.sigma2_2, q.s2_2, q.sigma2_12, m2.gmap, T);
  return v;
}

}  // namespace

double mqlr_classic(const GroupedFit& m1, const GroupedFit& m2, std::size_t T) {
  check_pair(m1, m2, T);
  double R1 = 0.0, R2 = 0.0;
  return mqlr_from(m1, m2, T, unit_quantities(m1, m2, T), R1, R2);
}

ClassicVariance variance_components(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, double mqlr) {
  check_pair(m1, m2, T);
  return variance_from(m1, m2, T, mqlr, unit_quantities(m1, m2, T));
}

double omega2_hybrid(double sigma2, double sigma2_u, double sigma2_s) {
  return std::max(sigma2 + sigma2_u - 2.0 * sigma2_s, sigma2_u);
}

TestReport classic_test_from_fits(const GroupedFit& m1, const GroupedFit& m2, std::size_t T, double level) {
  check_pair(m1, m2, T);
  const UnitQuantities q = unit_quantities(m1, m2, T);

  ClassicComponents c;
  c.mqlr = mqlr_from(m1, m2, T, q, c.R1, c.R2);
  c.L1 = m1.fit.loglik;
  c.L2 = m2.fit.loglik;
  const ClassicVariance v = variance_from(m1, m2, T, c.mqlr, q);
  c.sigma2 = v.sigma2;
  c.sigma2_u = v.sigma2_u;
  c.sigma2_s = v.sigma2_s;
  c.omega2 = omega2_hybrid(v.sigma2, v.sigma2_u, v.sigma2_s);
  c.sigma2_1 = q.sigma2_1;
  c.sigma2_2 = q.sigma2_2;
  c.s2_2 = q.s2_2;
  c.sigma2_12 = q.sigma2_12;

  TestReport report;
  report.test = "classic";
  report.qlr_raw = (c.L1 - c.L2) / std::sqrt(static_cast<double>(m1.gmap.n() * T));
  report.notes.push_back("scores assumed serially uncorrelated within units; no autocorrelation-robust variance");
  decide(report, c.mqlr, c.omega2, level);
  if (!report.degenerate) {
    if (c.sigma2 < 0.0) report.warnings.push_back("sample variance of the loglik difference is negative");
    if (v.sigma2 + v.sigma2_u - 2.0 * v.sigma2_s < v.sigma2_u) {
      report.warnings.push_back("hybrid variance floor binds: omega^2 set to the incidental-parameter term");
    }
  }
  report.components = std::move(c);
  return report;
}

TestReport run_classic_test(const Panel& panel, const ModelSpec& spec1, const ModelSpec& spec2, double level,
                            const ProfileOptions& opts) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::OutOfRange, "level must lie in (0, 1)");
  if (!spec1.gmap.is_individual()) {
    throw Error(ErrorCode::GroupingViolation, "model 1 must carry one effect per unit (G1 = n), got G1 = " +
                                                  std::to_string(spec1.gmap.G()));
  }
  if (spec1.time_blocks(panel.T()).M() != 1 || spec2.time_blocks(panel.T()).M() != 1) {
    throw Error(ErrorCode::GroupingViolation, "the classic test needs time-invariant group effects (one time block)");
  }
  const FitResult f1 = fit_profile_mle(panel, spec1, opts);
  const FitResult f2 = fit_profile_mle(panel, spec2, opts);
  return classic_test_from_fits({f1, spec1.gmap}, {f2, spec2.gmap}, panel.T(), level);
}

}  // namespace panelvuong
