#pragma once

namespace panelvuong {

// Standard normal distribution function, via erfc so both tails keep full
// relative precision.
double normal_cdf(double z);

// Inverse of normal_cdf. Throws OutOfRange unless 0 < q < 1.
double normal_quantile(double q);

}  // namespace panelvuong
