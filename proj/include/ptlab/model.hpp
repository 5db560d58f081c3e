#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ptlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dimensions, replica counts and the known variance components of a
/// proficiency-testing round. Lab 0 is the reference laboratory.
struct StudyDesign {
  int labs = 0;                ///< p, including the reference lab
  int levels = 0;              ///< m
  std::vector<int> replicas;   ///< n_i, one per lab
  Vector sigma2_x;             ///< variance of the measurand at each level
  Matrix sigma2;               ///< labs x levels error variances

  /// Builds and validates; throws Error(kInvalidInput) on any violated invariant.
  static StudyDesign make(std::vector<int> replicas, Vector sigma2_x, Matrix sigma2);

  void validate() const;
  int total_replicas() const;  ///< n = sum of n_i
};

/// Observed Y_ijk with cached per-cell sums and centered sums of squares.
///
/// The centered sums let the quadratic form Q_j be evaluated in O(p) per
/// level without re-reading replicates and without the cancellation of a raw
/// second moment.
class Measurements {
public:
  Measurements() = default;

  /// values[i][j] holds the replicates of lab i at level j.
  explicit Measurements(std::vector<std::vector<Vector>> values);

  int labs() const { return static_cast<int>(values_.size()); }
  int levels() const { return labs() == 0 ? 0 : static_cast<int>(values_.front().size()); }
  int replicas(int lab) const { return static_cast<int>(values_[lab].front().size()); }
  std::vector<int> replica_counts() const;

  const Vector& cell(int lab, int level) const { return values_[lab][level]; }
  double sum(int lab, int level) const { return sums_(lab, level); }
  double centered_ss(int lab, int level) const { return centered_ss_(lab, level); }
  const Matrix& sums() const { return sums_; }

  /// Throws Error(kDimensionMismatch) naming the first offending index.
  void check_against(const StudyDesign& design) const;

private:
  std::vector<std::vector<Vector>> values_;
  Matrix sums_;
  Matrix centered_ss_;
};

/// theta = (mu_x_1..mu_x_m, alpha_2..alpha_p, beta_2..beta_p).
/// The reference constraint alpha_1 = 0, beta_1 = 1 is never stored.
struct ParameterVector {
  Vector mu_x;   ///< m
  Vector alpha;  ///< p - 1, entry k belongs to lab k + 1
  Vector beta;   ///< p - 1

  static ParameterVector null_hypothesis(const Vector& mu_x, int labs);
  static ParameterVector from_flat(const Vector& flat, int levels, int labs);

  int levels() const { return static_cast<int>(mu_x.size()); }
  int labs() const { return static_cast<int>(alpha.size()) + 1; }
  Eigen::Index size() const { return mu_x.size() + alpha.size() + beta.size(); }

  Vector flat() const;
  /// Bias sub-vector (alpha..., beta...).
  Vector bias() const;

  // Lab-indexed accessors that honour the reference constraint.
  double alpha_of(int lab) const { return lab == 0 ? 0.0 : alpha[lab - 1]; }
  double beta_of(int lab) const { return lab == 0 ? 1.0 : beta[lab - 1]; }

  // Flat offsets of each block.
  Eigen::Index alpha_index(int lab) const { return mu_x.size() + lab - 1; }
  Eigen::Index beta_index(int lab) const { return mu_x.size() + alpha.size() + lab - 1; }
};

/// Null bias vector (0,...,0,1,...,1) of length 2(p-1).
Vector null_bias(int labs);

/// Per-level quantities from which likelihood, score and information are built.
struct LikelihoodKernels {
  Vector a;  ///< 1 + sigma2_x_j * beta' D^-1 beta
  Vector M;  ///< mu_x_j/sigma2_x_j + sum_i beta_i D_ij / sigma2_ij
  Matrix D;  ///< labs x levels, cell sums centred at alpha_i
  Vector Q;  ///< (y_j - mu_j)' Sigma_j^-1 (y_j - mu_j)
};

/// Throws Error(kDimensionMismatch) if theta, data and design disagree.
void check_dimensions(const ParameterVector& theta, const Measurements& data,
                      const StudyDesign& design);

LikelihoodKernels compute_kernels(const ParameterVector& theta, const Measurements& data,
                                  const StudyDesign& design);

double log_likelihood(const ParameterVector& theta, const Measurements& data,
                      const StudyDesign& design);

/// Same as above from precomputed kernels.
double log_likelihood(const LikelihoodKernels& kernels, const StudyDesign& design);

}  // namespace ptlab
