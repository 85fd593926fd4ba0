#include "panelvuong/report.hpp"

#include <algorithm>
#include <cmath>

#include "panelvuong/error.hpp"
#include "panelvuong/normal.hpp"

namespace panelvuong {

void decide(TestReport& report, double mqlr, double omega2, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::OutOfRange, "level must lie in (0, 1)");
  report.level = level;
  report.mqlr = mqlr;
  report.omega2_hat = omega2;
  report.statistic.reset();
  report.p_two_sided.reset();
  report.p_one_sided.reset();
  report.reject_two.reset();
  report.reject_one.reset();

  if (!(omega2 >= kDegenerateTol * std::max(1.0, mqlr * mqlr))) {
    report.degenerate = true;
    report.degenerate_reason = "models indistinguishable";
    return;
  }
  report.degenerate = false;
  report.degenerate_reason.clear();
  const double omega = std::sqrt(omega2);
  const double stat = mqlr / omega;
  report.statistic = stat;
  report.p_two_sided = std::clamp(2.0 * normal_cdf(-std::abs(stat)), 0.0, 1.0);
  report.p_one_sided = std::clamp(normal_cdf(-stat), 0.0, 1.0);
  report.reject_two = std::abs(mqlr) > omega * normal_quantile(1.0 - level / 2.0);
  report.reject_one = mqlr > omega * normal_quantile(1.0 - level);
}

}  // namespace panelvuong
