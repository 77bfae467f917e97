#pragma once

namespace sage::stats {

double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_sf(double x);
double normal_quantile(double p);
/// P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, double df);

}  // namespace sage::stats
