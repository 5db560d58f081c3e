#include "ptlab/em.hpp"

#include <cmath>
#include <string>

#include "ptlab/compensated_sum.hpp"
#include "ptlab/error.hpp"

namespace ptlab {

void EmSettings::validate() const {
  if (!(tol_loglik > 0.0) || !(tol_param > 0.0) || !(tol_score > 0.0) || max_iter < 1) {
    raise(ErrorKind::kInvalidInput, "EM tolerances must be positive and max_iter >= 1");
  }
}

ParameterVector default_start(const Measurements& data) {
  Vector mu(data.levels());
  for (int j = 0; j < data.levels(); ++j) mu[j] = data.sum(0, j) / data.replicas(0);
  return ParameterVector::null_hypothesis(mu, data.labs());
}

EStep e_step(const ParameterVector& theta, const Measurements& data, const StudyDesign& design) {
  const LikelihoodKernels k = compute_kernels(theta, data, design);
  EStep out{Vector(design.levels), Vector(design.levels)};
  for (int j = 0; j < design.levels; ++j) {
    const double var = design.sigma2_x[j] / k.a[j];
    out.xhat[j] = var * k.M[j];
    out.x2hat[j] = var + out.xhat[j] * out.xhat[j];
  }
  return out;
}

ParameterVector m_step(const EStep& moments, const Measurements& data, const StudyDesign& design) {
  data.check_against(design);
  const int p = design.labs;
  const int m = design.levels;
  if (moments.xhat.size() != m || moments.x2hat.size() != m) {
    raise(ErrorKind::kDimensionMismatch, "E-step moments do not match the number of levels");
  }

  ParameterVector next{moments.xhat, Vector(p - 1), Vector(p - 1)};
  for (int i = 1; i < p; ++i) {
    CompensatedSum sw, sx, sxx, sy, sxy;
    for (int j = 0; j < m; ++j) {
      const double w = 1.0 / design.sigma2(i, j);
      const double y = data.sum(i, j);
      sw += w;
      sx += w * moments.xhat[j];
      sxx += w * moments.x2hat[j];
      sy += w * y;
      sxy += w * moments.xhat[j] * y;
    }
    const double n_i = design.replicas[i];
    const double spread = sxx.value() * sw.value() - sx.value() * sx.value();
    if (!(spread > 1e-14 * sxx.value() * sw.value())) {
      raise(ErrorKind::kSingularDesign,
            "slope equation for lab " + std::to_string(i) + " has a vanishing denominator");
    }
    const double beta = (sxy.value() * sw.value() - sx.value() * sy.value()) / (n_i * spread);
    next.beta[i - 1] = beta;
    next.alpha[i - 1] = (sy.value() - n_i * beta * sx.value()) / (n_i * sw.value());
  }
  return next;
}

FitResult fit_em(const Measurements& data, const StudyDesign& design, const EmSettings& settings) {
  settings.validate();
  data.check_against(design);

  FitResult fit;
  fit.levels = design.levels;
  fit.weakly_identified = design.levels == 1;
  ParameterVector theta = settings.init ? *settings.init : default_start(data);
  double loglik = log_likelihood(theta, data, design);
  fit.loglik_trace.push_back(loglik);

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    ParameterVector next = m_step(e_step(theta, data, design), data, design);
    const double next_loglik = log_likelihood(next, data, design);
    const double step = (next.flat() - theta.flat()).cwiseAbs().maxCoeff();
    const double change = std::abs(next_loglik - loglik) / (1.0 + std::abs(loglik));
    theta = std::move(next);
    loglik = next_loglik;
    fit.loglik_trace.push_back(loglik);
    fit.iterations = iter;
    if (change <= settings.tol_loglik && step <= settings.tol_param) {
      fit.max_abs_score = score(theta, data, design).cwiseAbs().maxCoeff();
      if (fit.max_abs_score <= settings.tol_score * (1.0 + std::abs(loglik))) {
        fit.converged = true;
        break;
      }
    }
  }

  fit.theta_hat = theta;
  if (!fit.converged) fit.max_abs_score = score(theta, data, design).cwiseAbs().maxCoeff();
  fit.info = observed_information(theta, data, design);
  fit.bias = bias_block(fit.info, design.levels);
  return fit;
}

}  // namespace ptlab
