#pragma once

#include "ptlab/model.hpp"

namespace ptlab {

/// Full score vector dL/dtheta in the canonical flat ordering.
Vector score(const ParameterVector& theta, const Measurements& data, const StudyDesign& design);

/// Observed information J(theta) = -d2L/dtheta2, unnormalised, canonical ordering.
Matrix observed_information(const ParameterVector& theta, const Measurements& data,
                            const StudyDesign& design);

/// The bias block of J (rows/cols of alpha_2..alpha_p, beta_2..beta_p) and its inverse.
struct BiasBlock {
  Matrix info;
  Matrix inverse;
  double condition = 0.0;  ///< 2-norm condition of the diagonally equilibrated block
};

/// Block size is inferred from the layout: info is (m + 2(p-1)) square.
/// Throws Error(kSingularInformation) if the equilibrated condition exceeds 1e12.
BiasBlock bias_block(const Matrix& info, int levels);

enum class WeightConvention {
  kWeighted,  ///< limit weights w_i carried through every sum
  kLiteral,   ///< the printed closed form, with the w_i dropped
};

/// Almost-sure limit W of J/n for fixed latent values x and weights n_i/n -> w_i.
struct LimitMatrix {
  Matrix full;  ///< same indexing as observed_information
  Vector weights;
  Vector latent;

  Matrix bias_block() const;
};

LimitMatrix limit_matrix(const Vector& bias, const Vector& latent, const Vector& weights,
                         const StudyDesign& design,
                         WeightConvention convention = WeightConvention::kWeighted);

}  // namespace ptlab
