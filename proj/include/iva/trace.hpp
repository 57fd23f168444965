#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iva/errors.hpp"

namespace iva {

// Snapshot of one outer iteration. Record 0 describes the initial point
// (cost and moduli only); later records also carry the step metrics of the
// iteration that produced them.
struct IterationRecord {
  double cost = 0.0;
  double change_demixing = 0.0;
  double change_precision = 0.0;
  double lipschitz_demixing = 0.0;  // modulus at this iterate's precision
  double precision_norm = 0.0;      // spectral norm over precision slices
  int inner_demixing_steps = 0;
  int inner_precision_steps = 0;
  double step_size = 0.0;      // accepted line-search step (gradient solver)
  double grad_sq_norm = 0.0;   // squared gradient norm (gradient solver)
};

struct SolveTrace {
  std::vector<IterationRecord> iterations;
  int iterations_used = 0;
  double wall_seconds = 0.0;
  bool converged = false;
};

// Solver failure carrying the partial trace collected before the failure.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& msg, SolveTrace trace)
      : Error(msg), trace_(std::move(trace)) {}
  const SolveTrace& trace() const { return trace_; }

 private:
  SolveTrace trace_;
};

}  // namespace iva
