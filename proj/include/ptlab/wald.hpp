#pragma once

#include <vector>

#include "ptlab/em.hpp"
#include "ptlab/multiple_testing.hpp"

namespace ptlab {

struct WaldTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// H0: every alpha_i = 0 and every beta_i = 1, statistic (b - b0)' J~ (b - b0).
WaldTest wald_global(const FitResult& fit);

/// General linear(ised) hypothesis h = 0 with Jacobian H (2(p-1) x r):
/// h' [H' J~^-1 H]^-1 h.
WaldTest wald_composite(const FitResult& fit, const Vector& h_value, const Matrix& h_jacobian);

/// H0i: alpha_i = 0 and beta_i = 1 for a single lab (lab >= 1, lab 0 is the reference).
WaldTest wald_individual(const FitResult& fit, int lab);

/// Built-in affine hypotheses in (h, H) form.
struct Contrast {
  Vector value;
  Matrix jacobian;
};
Contrast global_contrast(const FitResult& fit);
Contrast lab_contrast(const FitResult& fit, int lab);

struct LabVerdict {
  int lab = 0;
  WaldTest test;
  double p_bonferroni = 1.0;
  double p_holm = 1.0;
  double p_hochberg = 1.0;
  double p_hommel = 1.0;
  bool reject = false;

  double adjusted(Adjustment method) const;
};

struct WaldReport {
  WaldTest global;
  std::vector<LabVerdict> labs;  ///< labs 1..p-1
  Adjustment method = Adjustment::kHochberg;
  double alpha = 0.05;
};

/// Global test plus every per-lab test, adjusted by all four methods; verdicts
/// use `method` at familywise level `alpha`.
WaldReport wald_report(const FitResult& fit, Adjustment method = Adjustment::kHochberg,
                       double alpha = 0.05);

struct EllipseSpec {
  int lab = 0;
  Eigen::Vector2d center;     ///< (alpha_hat, beta_hat)
  Eigen::Matrix2d shape;      ///< (alpha_i, beta_i) block of J~^-1
  double level = 0.0;         ///< per-lab confidence after Bonferroni division
  double radius2 = 0.0;       ///< chi-square(2) quantile at `level`
  std::vector<Eigen::Vector2d> boundary;  ///< closed: last point repeats the first

  /// (z - center)' shape^-1 (z - center)
  double mahalanobis2(const Eigen::Vector2d& z) const;
  bool contains(const Eigen::Vector2d& z) const { return mahalanobis2(z) <= radius2; }
};

/// Joint confidence region for (alpha_i, beta_i). `confidence` is the
/// familywise coefficient (0.99 gives a 1% familywise error), divided
/// Bonferroni-style over `comparisons` regions.
EllipseSpec confidence_ellipse(const FitResult& fit, int lab, double confidence, int comparisons,
                               int points = 256);

}  // namespace ptlab
