#pragma once

#include "iva/objective.hpp"

namespace iva {

// Lipschitz moduli of the smooth term's block gradients at a given precision
// tensor.
struct LipschitzInfo {
  double block_column_norm = 0.0;  // covariance contribution, fixed per problem
  double precision_norm = 0.0;     // max spectral norm over precision slices
  double demixing_modulus = 0.0;   // product of the two
  double precision_modulus = 0.0;  // alpha
};

// max_n of the spectral norm of the precision slices.
double precision_spectral_norm(const PrecisionTensor& precision);

// Modulus of the demixing-block gradient of the smooth term. Positive
// whenever the precision tensor and covariance are nonzero.
double lipschitz_demixing(const PrecisionTensor& precision,
                          const EmpiricalCovariance& cov);

LipschitzInfo lipschitz_info(const PrecisionTensor& precision,
                             const EmpiricalCovariance& cov,
                             const RegularizationParams& reg);

// Gradient of the smooth term in the demixing block, one slice per dataset.
MatrixStack grad_smooth_demixing(const DemixingTensor& demixing,
                                 const PrecisionTensor& precision,
                                 const EmpiricalCovariance& cov);

// Gradient of the smooth term in the precision block, one slice per source.
MatrixStack grad_smooth_precision(const DemixingTensor& demixing,
                                  const PrecisionTensor& precision,
                                  const EmpiricalCovariance& cov,
                                  const RegularizationParams& reg);

// Proximal map of step * (demixing barrier): shrinks each slice's singular
// values toward the stable root, keeping every slice nonsingular (all
// singular values end up at or above sqrt(step)).
DemixingTensor prox_demixing(const MatrixStack& candidate, double step);

// Proximal map of step * (precision barrier): adjusts each slice's
// eigenvalues toward the stable root and clamps them at the floor.
PrecisionTensor prox_precision(const MatrixStack& candidate, double step,
                               const RegularizationParams& reg);

// Largest squared row displacement between two demixing tensors, normalized
// by 2N. Used as the solver's convergence metric on the demixing block.
double demixing_change(const DemixingTensor& a, const DemixingTensor& b);

// Largest squared row displacement between two precision tensors, normalized
// by 2K.
double precision_change(const PrecisionTensor& a, const PrecisionTensor& b);

}  // namespace iva
