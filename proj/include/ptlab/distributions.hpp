#pragma once

namespace ptlab {

/// Regularised lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularised upper incomplete gamma Q(a, x) = 1 - P(a, x), accurate in the far tail.
double gamma_q(double a, double x);

/// P(X <= x) for X ~ chi-square(df). Throws Error(kDomain) for x < 0 or df < 1.
double chi2_cdf(double x, int df);
/// P(X > x), the Wald p-value.
double chi2_sf(double x, int df);
/// Inverse of chi2_cdf for prob in [0, 1).
double chi2_quantile(double prob, int df);

double normal_cdf(double z);
/// Standard normal quantile, absolute error well below 1e-12 on (0, 1).
double normal_quantile(double u);

}  // namespace ptlab
