#include "ptlab/wald.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ptlab/distributions.hpp"
#include "ptlab/error.hpp"

namespace ptlab {
namespace {

void check_lab(const FitResult& fit, int lab) {
  if (lab < 1 || lab >= fit.labs()) {
    raise(ErrorKind::kInvalidInput, "lab index " + std::to_string(lab) +
                                        " is not a participant (valid: 1.." +
                                        std::to_string(fit.labs() - 1) + ")");
  }
}

// Positions of alpha_i and beta_i inside the bias sub-vector.
std::pair<Eigen::Index, Eigen::Index> bias_positions(const FitResult& fit, int lab) {
  return {lab - 1, fit.labs() - 1 + lab - 1};
}

}  // namespace

WaldTest wald_global(const FitResult& fit) {
  const Vector d = fit.theta_hat.bias() - null_bias(fit.labs());
  const int df = static_cast<int>(d.size());
  const double q = d.dot(fit.bias.info * d);
  return {q, df, chi2_sf(std::max(q, 0.0), df)};
}

WaldTest wald_composite(const FitResult& fit, const Vector& h_value, const Matrix& h_jacobian) {
  const Eigen::Index dim = fit.bias.info.rows();
  const Eigen::Index r = h_value.size();
  if (h_jacobian.rows() != dim || h_jacobian.cols() != r || r == 0) {
    raise(ErrorKind::kDimensionMismatch, "hypothesis Jacobian must be " + std::to_string(dim) +
                                             " x " + std::to_string(r));
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(h_jacobian);
  if (qr.rank() != r) {
    raise(ErrorKind::kRankDeficient, "hypothesis Jacobian has rank " + std::to_string(qr.rank()) +
                                         ", expected " + std::to_string(r));
  }
  const Matrix inner = h_jacobian.transpose() * fit.bias.inverse * h_jacobian;
  const Eigen::LDLT<Matrix> ldlt(inner);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().maxCoeff()) {
    raise(ErrorKind::kSingularInformation, "H' J^-1 H is not positive definite");
  }
  const double q = h_value.dot(ldlt.solve(h_value));
  return {q, static_cast<int>(r), chi2_sf(std::max(q, 0.0), static_cast<int>(r))};
}

WaldTest wald_individual(const FitResult& fit, int lab) {
  check_lab(fit, lab);
  const auto [ia, ib] = bias_positions(fit, lab);
  const Matrix& v = fit.bias.inverse;
  const double a = fit.theta_hat.alpha_of(lab);
  const double b = fit.theta_hat.beta_of(lab) - 1.0;
  const double det = v(ia, ia) * v(ib, ib) - v(ia, ib) * v(ia, ib);
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
    raise(ErrorKind::kSingularInformation,
          "covariance block of lab " + std::to_string(lab) + " is singular");
  }
  const double q = (b * b * v(ia, ia) - 2.0 * a * b * v(ia, ib) + a * a * v(ib, ib)) / det;
  return {q, 2, chi2_sf(std::max(q, 0.0), 2)};
}

Contrast global_contrast(const FitResult& fit) {
  const Vector d = fit.theta_hat.bias() - null_bias(fit.labs());
  return {d, Matrix::Identity(d.size(), d.size())};
}

Contrast lab_contrast(const FitResult& fit, int lab) {
  check_lab(fit, lab);
  const auto [ia, ib] = bias_positions(fit, lab);
  Contrast c{Vector(2), Matrix::Zero(2 * (fit.labs() - 1), 2)};
  c.value << fit.theta_hat.alpha_of(lab), fit.theta_hat.beta_of(lab) - 1.0;
  c.jacobian(ia, 0) = 1.0;
  c.jacobian(ib, 1) = 1.0;
  return c;
}

double LabVerdict::adjusted(Adjustment method) const {
  switch (method) {
    case Adjustment::kBonferroni: return p_bonferroni;
    case Adjustment::kHolm: return p_holm;
    case Adjustment::kHochberg: return p_hochberg;
    case Adjustment::kHommel: return p_hommel;
  }
  return test.p_value;
}

WaldReport wald_report(const FitResult& fit, Adjustment method, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) raise(ErrorKind::kDomain, "familywise level must be in (0, 1)");
  WaldReport report;
  report.global = wald_global(fit);
  report.method = method;
  report.alpha = alpha;

  std::vector<double> raw;
  for (int lab = 1; lab < fit.labs(); ++lab) {
    LabVerdict v;
    v.lab = lab;
    v.test = wald_individual(fit, lab);
    raw.push_back(v.test.p_value);
    report.labs.push_back(v);
  }
  const auto bonferroni = adjust_pvalues(raw, Adjustment::kBonferroni);
  const auto holm = adjust_pvalues(raw, Adjustment::kHolm);
  const auto hochberg = adjust_pvalues(raw, Adjustment::kHochberg);
  const auto hommel = adjust_pvalues(raw, Adjustment::kHommel);
  for (std::size_t k = 0; k < report.labs.size(); ++k) {
    LabVerdict& v = report.labs[k];
    v.p_bonferroni = bonferroni[k];
    v.p_holm = holm[k];
    v.p_hochberg = hochberg[k];
    v.p_hommel = hommel[k];
    v.reject = v.adjusted(method) <= alpha;
  }
  return report;
}

double EllipseSpec::mahalanobis2(const Eigen::Vector2d& z) const {
  const Eigen::Vector2d d = z - center;
  return d.dot(shape.ldlt().solve(d));
}

EllipseSpec confidence_ellipse(const FitResult& fit, int lab, double confidence, int comparisons,
                               int points) {
  check_lab(fit, lab);
  if (!(confidence > 0.0 && confidence < 1.0)) {
    raise(ErrorKind::kDomain, "confidence coefficient must be in (0, 1)");
  }
  if (comparisons < 1) raise(ErrorKind::kDomain, "comparisons must be >= 1");
  if (points < 128) raise(ErrorKind::kDomain, "an ellipse needs at least 128 boundary points");

  const auto [ia, ib] = bias_positions(fit, lab);
  EllipseSpec e;
  e.lab = lab;
  e.center << fit.theta_hat.alpha_of(lab), fit.theta_hat.beta_of(lab);
  e.shape << fit.bias.inverse(ia, ia), fit.bias.inverse(ia, ib), fit.bias.inverse(ib, ia),
      fit.bias.inverse(ib, ib);
  e.level = 1.0 - (1.0 - confidence) / comparisons;
  e.radius2 = chi2_quantile(e.level, 2);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(e.shape);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    raise(ErrorKind::kSingularInformation,
          "covariance block of lab " + std::to_string(lab) + " is not positive definite");
  }
  const Eigen::Matrix2d root =
      eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() * std::sqrt(e.radius2);
  e.boundary.reserve(points + 1);
  for (int k = 0; k < points; ++k) {
    const double t = 2.0 * std::numbers::pi * k / points;
    e.boundary.push_back(e.center + root * Eigen::Vector2d(std::cos(t), std::sin(t)));
  }
  e.boundary.push_back(e.boundary.front());
  return e;
}

}  // namespace ptlab
