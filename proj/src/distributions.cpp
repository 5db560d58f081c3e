#include "ptlab/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ptlab/error.hpp"

namespace ptlab {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 100000;

// x^a e^-x / Gamma(a)
double gamma_prefactor(double a, double x) {
  return std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * gamma_prefactor(a, x);
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double upper_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h * gamma_prefactor(a, x);
}

void check_chi2_args(double x, int df) {
  if (df < 1) raise(ErrorKind::kDomain, "degrees of freedom must be >= 1");
  if (!(x >= 0.0)) raise(ErrorKind::kDomain, "chi-square argument must be >= 0");
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) raise(ErrorKind::kDomain, "gamma_p needs a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? lower_series(a, x) : 1.0 - upper_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) raise(ErrorKind::kDomain, "gamma_q needs a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - lower_series(a, x) : upper_fraction(a, x);
}

double chi2_cdf(double x, int df) {
  check_chi2_args(x, df);
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, int df) {
  check_chi2_args(x, df);
  return gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(double prob, int df) {
  if (df < 1) raise(ErrorKind::kDomain, "degrees of freedom must be >= 1");
  if (!(prob >= 0.0 && prob < 1.0)) {
    raise(ErrorKind::kDomain, "chi-square quantile needs prob in [0, 1), got " +
                                  std::to_string(prob));
  }
  if (prob == 0.0) return 0.0;

  // Work on whichever tail keeps the target away from 1.
  const bool upper = prob > 0.5;
  const double target = upper ? 1.0 - prob : prob;
  const double k = 0.5 * df;
  auto miss = [&](double x) {
    return upper ? target - chi2_sf(x, df) : chi2_cdf(x, df) - target;
  };
  auto density = [&](double x) {
    return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - std::lgamma(k));
  };

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(df));
  while (miss(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = miss(x);
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    const double slope = density(x);
    double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * kEps * x) return next;
    x = next;
  }
  return x;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) raise(ErrorKind::kDomain, "normal quantile needs u in (0, 1)");

  // Acklam's rational approximation, then one Halley correction.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;

  double z;
  if (u < low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - low) {
    const double q = u - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Residual taken on the smaller tail to avoid cancellation near 1.
  const double e = u < 0.5 ? normal_cdf(z) - u : (1.0 - u) - normal_cdf(-z);
  const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
  return z - step / (1.0 + 0.5 * z * step);
}

}  // namespace ptlab
