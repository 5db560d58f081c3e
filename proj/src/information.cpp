#include "ptlab/information.hpp"

#include <cmath>
#include <string>

#include "ptlab/error.hpp"

namespace ptlab {

Vector score(const ParameterVector& theta, const Measurements& data, const StudyDesign& design) {
  const LikelihoodKernels k = compute_kernels(theta, data, design);
  const int p = design.labs;
  const int m = design.levels;

  Vector u = Vector::Zero(theta.size());
  for (int j = 0; j < m; ++j) {
    const double s2x = design.sigma2_x[j];
    const double a = k.a[j];
    const double M = k.M[j];
    u[j] = M / a - theta.mu_x[j] / s2x;
    for (int i = 1; i < p; ++i) {
      const double n_i = design.replicas[i];
      const double s2 = design.sigma2(i, j);
      const double beta = theta.beta_of(i);
      const double centred = n_i * beta * M * s2x / a - k.D(i, j);
      u[theta.alpha_index(i)] -= centred / s2;
      u[theta.beta_index(i)] -= s2x / (a * s2) * (n_i * beta + M * centred);
    }
  }
  return u;
}

Matrix observed_information(const ParameterVector& theta, const Measurements& data,
                            const StudyDesign& design) {
  const LikelihoodKernels k = compute_kernels(theta, data, design);
  const int p = design.labs;
  const int m = design.levels;

  Matrix J = Matrix::Zero(theta.size(), theta.size());
  auto put = [&J](Eigen::Index r, Eigen::Index c, double v) {
    J(r, c) += v;
    if (r != c) J(c, r) += v;
  };

  for (int j = 0; j < m; ++j) {
    const double s2x = design.sigma2_x[j];
    const double a = k.a[j];
    const double M = k.M[j];
    const double shrink = s2x / a;  // sigma2_x / a, recurs in every entry

    // g_i = 2 n_i beta_i sigma2_x M / a - D_ij
    Vector g(p);
    for (int i = 1; i < p; ++i) {
      g[i] = 2.0 * design.replicas[i] * theta.beta_of(i) * shrink * M - k.D(i, j);
    }

    put(j, j, (a - 1.0) / (s2x * a));

    for (int i = 1; i < p; ++i) {
      const double n_i = design.replicas[i];
      const double s_i = design.sigma2(i, j);
      const double b_i = theta.beta_of(i);
      const double d_i = k.D(i, j);
      const Eigen::Index ai = theta.alpha_index(i);
      const Eigen::Index bi = theta.beta_index(i);

      put(j, ai, n_i * b_i / (s_i * a));
      put(j, bi, g[i] / (s_i * a));

      put(ai, ai, n_i / s_i * (1.0 - n_i * b_i * b_i * shrink / s_i));
      put(ai, bi, n_i * shrink / s_i * (M - b_i / s_i * g[i]));
      put(bi, bi,
          shrink / s_i *
              (n_i - d_i * d_i / s_i +
               n_i * shrink *
                   (M * M * (1.0 - 4.0 * n_i * shrink * b_i * b_i / s_i) +
                    4.0 * b_i * M * d_i / s_i - 2.0 * n_i * b_i * b_i / s_i)));

      for (int l = 1; l < p; ++l) {
        if (l == i) continue;
        const double n_l = design.replicas[l];
        const double s_l = design.sigma2(l, j);
        const double b_l = theta.beta_of(l);
        const double d_l = k.D(l, j);
        const Eigen::Index al = theta.alpha_index(l);
        const Eigen::Index bl = theta.beta_index(l);

        // alpha_i x beta_l is not symmetric in (i, l); every ordered pair is visited.
        J(ai, bl) += -n_i * b_i * shrink / (s_i * s_l) * g[l];
        J(bl, ai) += -n_i * b_i * shrink / (s_i * s_l) * g[l];
        if (l > i) {
          put(ai, al, -n_i * n_l * b_i * b_l * shrink / (s_i * s_l));
          put(bi, bl,
              -shrink / (s_i * s_l) *
                  (d_i * d_l +
                   2.0 * shrink *
                       (n_i * n_l * b_i * b_l * (1.0 + 2.0 * shrink * M * M) -
                        n_i * b_i * M * d_l - n_l * b_l * M * d_i)));
        }
      }
    }
  }
  return J;
}

BiasBlock bias_block(const Matrix& info, int levels) {
  const Eigen::Index size = info.rows() - levels;
  if (info.rows() != info.cols() || size <= 0 || size % 2 != 0) {
    raise(ErrorKind::kDimensionMismatch, "information matrix of size " +
                                             std::to_string(info.rows()) + " has no bias block");
  }
  BiasBlock out;
  out.info = info.bottomRightCorner(size, size);

  Vector scale(size);
  for (Eigen::Index r = 0; r < size; ++r) {
    const double d = std::abs(out.info(r, r));
    if (!(d > 0.0) || !std::isfinite(d)) {
      raise(ErrorKind::kSingularInformation,
            "bias block has a zero diagonal entry at position " + std::to_string(r));
    }
    scale[r] = 1.0 / std::sqrt(d);
  }
  const Matrix equilibrated = scale.asDiagonal() * out.info * scale.asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(equilibrated);
  const Vector& sv = svd.singularValues();
  out.condition = sv[0] / sv[size - 1];
  if (!std::isfinite(out.condition) || out.condition > 1e12) {
    raise(ErrorKind::kSingularInformation,
          "bias block condition estimate " + std::to_string(out.condition) + " exceeds 1e12");
  }
  out.inverse = scale.asDiagonal() * equilibrated.partialPivLu().inverse() * scale.asDiagonal();
  out.inverse = 0.5 * (out.inverse + out.inverse.transpose()).eval();

  const Matrix residual =
      scale.asDiagonal().inverse() * (out.info * out.inverse - Matrix::Identity(size, size)) *
      scale.asDiagonal();
  if (residual.cwiseAbs().maxCoeff() > 1e-8) {
    raise(ErrorKind::kSingularInformation, "bias block inverse failed the residual check");
  }
  return out;
}

Matrix LimitMatrix::bias_block() const {
  const Eigen::Index size = 2 * (weights.size() - 1);
  return full.bottomRightCorner(size, size);
}

LimitMatrix limit_matrix(const Vector& bias, const Vector& latent, const Vector& weights,
                         const StudyDesign& design, WeightConvention convention) {
  const int p = design.labs;
  const int m = design.levels;
  if (bias.size() != 2 * (p - 1) || latent.size() != m || weights.size() != p) {
    raise(ErrorKind::kDimensionMismatch, "limit matrix inputs do not match the design");
  }
  if ((weights.array() <= 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    raise(ErrorKind::kDomain, "limit weights must be positive and sum to one");
  }

  const bool weighted = convention == WeightConvention::kWeighted;
  auto w = [&](int i) { return weighted ? weights[i] : 1.0; };
  auto beta = [&](int i) { return i == 0 ? 1.0 : bias[p - 1 + i - 1]; };

  const Eigen::Index dim = m + 2 * (p - 1);
  LimitMatrix out{Matrix::Zero(dim, dim), weights, latent};
  Matrix& W = out.full;
  const auto alpha_at = [m](int i) { return m + i - 1; };
  const auto beta_at = [m, p](int i) { return m + (p - 1) + i - 1; };

  for (int j = 0; j < m; ++j) {
    double S = 0.0;
    for (int q = 0; q < p; ++q) S += w(q) * beta(q) * beta(q) / design.sigma2(q, j);
    const double x = latent[j];
    for (int i = 1; i < p; ++i) {
      const double s_i = design.sigma2(i, j);
      const double own = w(i) / s_i * (1.0 - w(i) * beta(i) * beta(i) / (s_i * S));
      W(alpha_at(i), alpha_at(i)) += own;
      W(alpha_at(i), beta_at(i)) += own * x;
      W(beta_at(i), beta_at(i)) += own * x * x;
      for (int l = 1; l < p; ++l) {
        if (l == i) continue;
        const double cross = -w(i) * w(l) * beta(i) * beta(l) / (s_i * design.sigma2(l, j) * S);
        W(alpha_at(i), alpha_at(l)) += cross;
        W(alpha_at(i), beta_at(l)) += cross * x;
        W(beta_at(i), beta_at(l)) += cross * x * x;
      }
    }
  }
  // alpha_i x beta_l is filled for every ordered pair; mirror it below the diagonal
  for (int i = 1; i < p; ++i) {
    for (int l = 1; l < p; ++l) W(beta_at(l), alpha_at(i)) = W(alpha_at(i), beta_at(l));
  }
  return out;
}

}  // namespace ptlab
