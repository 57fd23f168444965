#pragma once

#include "iva/tensor_model.hpp"

namespace iva {

// Penalty weight and eigenvalue floor of the regularized objective.
struct RegularizationParams {
  double alpha = 1.0;
  double epsilon = 1e-12;

  void validate() const;
};

// Smooth coupling term: for each source, half the trace of precision times
// the source's Gram, plus the quadratic penalty tying precision diagonals
// to one. Always finite.
double cost_smooth(const DemixingTensor& demixing, const PrecisionTensor& precision,
                   const EmpiricalCovariance& cov, const RegularizationParams& reg);

// Nonsmooth demixing term: minus the sum of log |det| over slices. +inf when
// any slice is singular.
double cost_demixing_barrier(const DemixingTensor& demixing);

// Nonsmooth precision term: minus half the sum of log det over slices. +inf
// unless every slice is symmetric positive definite with smallest eigenvalue
// at or above the floor.
double cost_precision_barrier(const PrecisionTensor& precision,
                              const RegularizationParams& reg);

// Full regularized objective: smooth term plus both barriers.
double cost_regularized(const DemixingTensor& demixing,
                        const PrecisionTensor& precision,
                        const EmpiricalCovariance& cov,
                        const RegularizationParams& reg);

// Unregularized negative log-likelihood (no diagonal penalty, no eigenvalue
// floor; still +inf outside the positive definite / nonsingular domain).
double cost_likelihood(const DemixingTensor& demixing,
                       const PrecisionTensor& precision,
                       const EmpiricalCovariance& cov);

// Likelihood profiled over the precision tensor: a function of the demixing
// tensor alone. Differs from cost_likelihood at the optimal precision by the
// constant K*N/2.
double cost_reduced(const DemixingTensor& demixing, const EmpiricalCovariance& cov);

// Minimizer of the likelihood over the precision block: the inverse of each
// source's Gram matrix. Throws SingularMatrixError when a Gram is singular.
PrecisionTensor optimal_precision(const DemixingTensor& demixing,
                                  const EmpiricalCovariance& cov);

}  // namespace iva
