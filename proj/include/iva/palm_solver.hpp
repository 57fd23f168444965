#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "iva/calculus.hpp"
#include "iva/trace.hpp"

namespace iva {

enum class InitMode { Identity, RandomOrthogonal };

struct PalmConfig {
  double gamma_demixing = 0.99;   // demixing step safety factor, in (0, 1)
  double gamma_precision = 1.99;  // precision step safety factor, in (0, 2)
  double alpha = 1.0;
  double epsilon = 1e-12;
  double delta = 1e-10;           // convergence threshold on block changes
  int max_outer = 20000;
  int max_inner_demixing = 15;
  int max_inner_precision = 1;
  std::uint64_t seed = 0;
  InitMode init = InitMode::Identity;

  void validate() const;
  RegularizationParams regularization() const { return {alpha, epsilon}; }
};

struct PalmResult {
  DemixingTensor demixing;
  PrecisionTensor precision;
  SolveTrace trace;
};

// Called after the initial point (iteration 0) and after every outer
// iteration with the current iterates.
using PalmObserver =
    std::function<void(int outer_iteration, const DemixingTensor&,
                       const PrecisionTensor&)>;

// Identity demixing slices, or independent random orthogonal ones drawn
// from the seed (one substream per dataset).
DemixingTensor init_demixing(int num_datasets, int num_sources, InitMode mode,
                             std::uint64_t seed);

// Starting point: identity precision slices and either identity demixing
// slices or independent random orthogonal ones drawn from cfg.seed.
std::pair<DemixingTensor, PrecisionTensor> init_point(int num_datasets,
                                                      int num_sources,
                                                      const PalmConfig& cfg);

// Alternating proximal-gradient descent on the regularized objective. The
// demixing and precision blocks take at most max_inner_* prox-gradient steps
// per outer iteration, each with a fixed step sized by the block's gradient
// modulus; the outer loop stops when both blocks' change metrics drop to
// delta or the iteration cap is hit.
PalmResult palm_solve(const EmpiricalCovariance& cov, const PalmConfig& cfg,
                      const PalmObserver& observer = {});

// Residual norm of one prox-gradient fixed-point step from (W, C): zero
// exactly at stationary points of the regularized objective.
double stationarity_residual(const DemixingTensor& demixing,
                             const PrecisionTensor& precision,
                             const EmpiricalCovariance& cov,
                             const PalmConfig& cfg);

}  // namespace iva
