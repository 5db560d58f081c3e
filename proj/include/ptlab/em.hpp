#pragma once

#include <optional>
#include <vector>

#include "ptlab/information.hpp"
#include "ptlab/model.hpp"

namespace ptlab {

struct EmSettings {
  double tol_loglik = 1e-10;  ///< relative change in L between iterations
  double tol_param = 1e-8;    ///< max absolute change in any parameter
  double tol_score = 1e-7;    ///< max |U(theta)| relative to 1 + |L|
  int max_iter = 10000;
  std::optional<ParameterVector> init;

  void validate() const;
};

struct EStep {
  Vector xhat;   ///< E[x_j | Y]
  Vector x2hat;  ///< E[x_j^2 | Y]
};

struct FitResult {
  ParameterVector theta_hat;
  std::vector<double> loglik_trace;  ///< L at the start and after every update
  int iterations = 0;
  bool converged = false;
  bool weakly_identified = false;  ///< single-level design: beta is confounded with alpha
  double max_abs_score = 0.0;      ///< max |U(theta_hat)| over all components
  Matrix info;                     ///< J(theta_hat)
  BiasBlock bias;                  ///< bias block of J and its inverse (v entries)
  int levels = 0;

  double loglik() const { return loglik_trace.back(); }
  int labs() const { return theta_hat.labs(); }
};

/// Mean-of-reference-lab start with alpha = 0, beta = 1.
ParameterVector default_start(const Measurements& data);

EStep e_step(const ParameterVector& theta, const Measurements& data, const StudyDesign& design);

/// Closed-form maximiser of the expected complete-data log-likelihood.
/// Throws Error(kSingularDesign) naming the lab whose slope equation degenerates.
ParameterVector m_step(const EStep& moments, const Measurements& data, const StudyDesign& design);

/// Runs EM to convergence. Non-convergence is reported through `converged`,
/// not thrown; a singular design or singular information at the estimate is.
FitResult fit_em(const Measurements& data, const StudyDesign& design,
                 const EmSettings& settings = {});

}  // namespace ptlab
