#pragma once

#include <cstdint>

#include "iva/palm_solver.hpp"

namespace iva {

struct IvagvConfig {
  // Convergence threshold on demixing change between accepted steps. The
  // per-iteration movement fluctuates with the accepted step length, so this
  // sits below the nominal target precision; 1e-8 stops at the score plateau
  // on the synthetic benchmark cases.
  double delta = 1e-8;
  int max_iter = 20000;
  double armijo_c1 = 1e-4;        // sufficient-decrease constant
  double backtrack_factor = 0.5;  // step shrink per rejected trial
  double initial_step = 1.0;
  int max_halvings = 60;          // line-search failure threshold
  std::uint64_t seed = 0;
  InitMode init = InitMode::Identity;

  void validate() const;
};

struct IvagvResult {
  DemixingTensor demixing;
  SolveTrace trace;
};

// Gradient of the profiled likelihood (cost_reduced): the smooth-term
// demixing gradient evaluated at the optimal precision, minus each slice's
// inverse transpose. Throws SingularMatrixError on singular slices or Grams.
MatrixStack grad_reduced(const DemixingTensor& demixing,
                         const EmpiricalCovariance& cov);

// Rescales every row so each estimated source has unit variance in its own
// dataset: w_n^(k)T R_(k,k) w_n^(k) = 1. Leaves the profiled likelihood
// unchanged up to roundoff.
DemixingTensor normalize_rows(const DemixingTensor& demixing,
                              const EmpiricalCovariance& cov);

// Armijo backtracking gradient descent on the profiled likelihood, with row
// normalization after every accepted step. Reference point for the
// proximal solver.
IvagvResult ivagv_solve(const EmpiricalCovariance& cov, const IvagvConfig& cfg);

}  // namespace iva
