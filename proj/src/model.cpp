#include "ptlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ptlab/compensated_sum.hpp"
#include "ptlab/error.hpp"

namespace ptlab {

StudyDesign StudyDesign::make(std::vector<int> replicas, Vector sigma2_x, Matrix sigma2) {
  StudyDesign d;
  d.labs = static_cast<int>(sigma2.rows());
  d.levels = static_cast<int>(sigma2_x.size());
  d.replicas = std::move(replicas);
  d.sigma2_x = std::move(sigma2_x);
  d.sigma2 = std::move(sigma2);
  d.validate();
  return d;
}

void StudyDesign::validate() const {
  if (labs < 2) raise(ErrorKind::kInvalidInput, "at least two laboratories are required");
  if (levels < 1) raise(ErrorKind::kInvalidInput, "at least one level is required");
  if (static_cast<int>(replicas.size()) != labs) {
    raise(ErrorKind::kInvalidInput, "replicas has " + std::to_string(replicas.size()) +
                                        " entries, expected " + std::to_string(labs));
  }
  if (sigma2_x.size() != levels || sigma2.rows() != labs || sigma2.cols() != levels) {
    raise(ErrorKind::kInvalidInput, "variance arrays do not match labs x levels");
  }
  for (int i = 0; i < labs; ++i) {
    if (replicas[i] < 1) {
      raise(ErrorKind::kInvalidInput, "lab " + std::to_string(i) + " has no replicas");
    }
  }
  for (int j = 0; j < levels; ++j) {
    if (!(sigma2_x[j] > 0.0) || !std::isfinite(sigma2_x[j])) {
      raise(ErrorKind::kInvalidInput,
            "sigma2_x[" + std::to_string(j) + "] must be positive and finite");
    }
    for (int i = 0; i < labs; ++i) {
      if (!(sigma2(i, j) > 0.0) || !std::isfinite(sigma2(i, j))) {
        raise(ErrorKind::kInvalidInput, "sigma2[" + std::to_string(i) + "][" +
                                            std::to_string(j) + "] must be positive and finite");
      }
    }
  }
}

int StudyDesign::total_replicas() const {
  int n = 0;
  for (int r : replicas) n += r;
  return n;
}

Measurements::Measurements(std::vector<std::vector<Vector>> values) : values_(std::move(values)) {
  const int p = labs();
  const int m = levels();
  sums_.resize(p, m);
  centered_ss_.resize(p, m);
  for (int i = 0; i < p; ++i) {
    if (static_cast<int>(values_[i].size()) != m) {
      raise(ErrorKind::kDimensionMismatch,
            "lab " + std::to_string(i) + " has " + std::to_string(values_[i].size()) +
                " levels, expected " + std::to_string(m));
    }
    const Eigen::Index n_i = values_[i].front().size();
    for (int j = 0; j < m; ++j) {
      const Vector& y = values_[i][j];
      if (y.size() == 0 || y.size() != n_i) {
        raise(ErrorKind::kDimensionMismatch,
              "cell (lab " + std::to_string(i) + ", level " + std::to_string(j) + ") has " +
                  std::to_string(y.size()) + " replicates, expected " + std::to_string(n_i));
      }
      CompensatedSum s;
      for (double v : y) s += v;
      const double mean = s.value() / static_cast<double>(n_i);
      CompensatedSum ss;
      for (double v : y) ss += (v - mean) * (v - mean);
      sums_(i, j) = s.value();
      centered_ss_(i, j) = ss.value();
    }
  }
}

std::vector<int> Measurements::replica_counts() const {
  std::vector<int> n(labs());
  for (int i = 0; i < labs(); ++i) n[i] = replicas(i);
  return n;
}

void Measurements::check_against(const StudyDesign& design) const {
  if (labs() != design.labs) {
    raise(ErrorKind::kDimensionMismatch, "data has " + std::to_string(labs()) +
                                             " labs, design has " + std::to_string(design.labs));
  }
  if (levels() != design.levels) {
    raise(ErrorKind::kDimensionMismatch, "data has " + std::to_string(levels()) +
                                             " levels, design has " +
                                             std::to_string(design.levels));
  }
  for (int i = 0; i < labs(); ++i) {
    if (replicas(i) != design.replicas[i]) {
      raise(ErrorKind::kDimensionMismatch,
            "lab " + std::to_string(i) + " has " + std::to_string(replicas(i)) +
                " replicates, design says " + std::to_string(design.replicas[i]));
    }
  }
}

ParameterVector ParameterVector::null_hypothesis(const Vector& mu_x, int labs) {
  return {mu_x, Vector::Zero(labs - 1), Vector::Ones(labs - 1)};
}

ParameterVector ParameterVector::from_flat(const Vector& flat, int levels, int labs) {
  if (flat.size() != levels + 2 * (labs - 1)) {
    raise(ErrorKind::kDimensionMismatch, "flat parameter vector has length " +
                                             std::to_string(flat.size()) + ", expected " +
                                             std::to_string(levels + 2 * (labs - 1)));
  }
  return {flat.head(levels), flat.segment(levels, labs - 1), flat.tail(labs - 1)};
}

Vector ParameterVector::flat() const {
  Vector v(size());
  v << mu_x, alpha, beta;
  return v;
}

Vector ParameterVector::bias() const {
  Vector v(alpha.size() + beta.size());
  v << alpha, beta;
  return v;
}

Vector null_bias(int labs) {
  Vector v(2 * (labs - 1));
  v << Vector::Zero(labs - 1), Vector::Ones(labs - 1);
  return v;
}

void check_dimensions(const ParameterVector& theta, const Measurements& data,
                      const StudyDesign& design) {
  data.check_against(design);
  if (theta.levels() != design.levels) {
    raise(ErrorKind::kDimensionMismatch, "theta has " + std::to_string(theta.levels()) +
                                             " level means, design has " +
                                             std::to_string(design.levels));
  }
  if (theta.alpha.size() != design.labs - 1 || theta.beta.size() != design.labs - 1) {
    raise(ErrorKind::kDimensionMismatch,
          "theta bias blocks must have " + std::to_string(design.labs - 1) + " entries");
  }
}

LikelihoodKernels compute_kernels(const ParameterVector& theta, const Measurements& data,
                                  const StudyDesign& design) {
  check_dimensions(theta, data, design);
  const int p = design.labs;
  const int m = design.levels;

  LikelihoodKernels k{Vector(m), Vector(m), Matrix(p, m), Vector(m)};
  for (int j = 0; j < m; ++j) {
    const double s2x = design.sigma2_x[j];
    const double mu = theta.mu_x[j];
    CompensatedSum info;  // beta' D^-1 beta
    CompensatedSum m_sum;
    CompensatedSum quad;  // r' D^-1 r
    CompensatedSum cross;  // beta' D^-1 r
    m_sum += mu / s2x;
    for (int i = 0; i < p; ++i) {
      const double n_i = design.replicas[i];
      const double s2 = design.sigma2(i, j);
      const double alpha = theta.alpha_of(i);
      const double beta = theta.beta_of(i);
      const double d = data.sum(i, j) - n_i * alpha;
      k.D(i, j) = d;
      info += n_i * beta * beta / s2;
      m_sum += beta * d / s2;
      const double r = data.sum(i, j) / n_i - alpha - beta * mu;
      quad += (data.centered_ss(i, j) + n_i * r * r) / s2;
      cross += beta * n_i * r / s2;
    }
    k.a[j] = 1.0 + s2x * info.value();
    k.M[j] = m_sum.value();
    const double c = cross.value();
    k.Q[j] = std::max(0.0, quad.value() - s2x * c * c / k.a[j]);
  }
  return k;
}

double log_likelihood(const LikelihoodKernels& kernels, const StudyDesign& design) {
  const int m = design.levels;
  const double n = design.total_replicas();
  CompensatedSum total;
  total += -0.5 * m * n * std::log(2.0 * std::numbers::pi);
  for (int j = 0; j < m; ++j) {
    total += -0.5 * std::log(kernels.a[j]);
    for (int i = 0; i < design.labs; ++i) {
      total += -0.5 * design.replicas[i] * std::log(design.sigma2(i, j));
    }
    total += -0.5 * kernels.Q[j];
  }
  const double value = total.value();
  if (!std::isfinite(value)) {
    raise(ErrorKind::kNumericOverflow, "log-likelihood is not finite");
  }
  return value;
}

double log_likelihood(const ParameterVector& theta, const Measurements& data,
                      const StudyDesign& design) {
  return log_likelihood(compute_kernels(theta, data, design), design);
}

}  // namespace ptlab
