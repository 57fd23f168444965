#include "iva/baseline_ivagv.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace iva {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void IvagvConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("delta must be positive and finite");
  }
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(armijo_c1 > 0.0) || !(armijo_c1 < 1.0)) {
    throw ConfigError("armijo_c1 must lie in (0, 1)");
  }
  if (!(backtrack_factor > 0.0) || !(backtrack_factor < 1.0)) {
    throw ConfigError("backtrack_factor must lie in (0, 1)");
  }
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
    throw ConfigError("initial_step must be positive and finite");
  }
  if (max_halvings < 1) throw ConfigError("max_halvings must be at least 1");
}

MatrixStack grad_reduced(const DemixingTensor& demixing,
                         const EmpiricalCovariance& cov) {
  const PrecisionTensor profiled = optimal_precision(demixing, cov);
  MatrixStack grad = grad_smooth_demixing(demixing, profiled, cov);
  for (int k = 0; k < cov.num_datasets(); ++k) {
    const MatrixXd& w = demixing.slice(k);
    if (log_abs_det(w) == -kInf) {
      throw SingularMatrixError("grad_reduced: demixing slice " +
                                std::to_string(k) + " is singular");
    }
    grad[k] -= w.inverse().transpose();
  }
  return grad;
}

DemixingTensor normalize_rows(const DemixingTensor& demixing,
                              const EmpiricalCovariance& cov) {
  const int K = cov.num_datasets();
  const int N = cov.num_sources();
  if (demixing.num_datasets() != K || demixing.num_sources() != N) {
    throw DimensionError("normalize_rows: demixing does not match covariance");
  }
  MatrixStack out(K);
  for (int k = 0; k < K; ++k) {
    out[k] = demixing.slice(k);
    const auto rkk = cov.block(k, k);
    for (int n = 0; n < N; ++n) {
      const double v = out[k].row(n) * rkk * out[k].row(n).transpose();
      if (!(v > 0.0)) {
        throw DomainError("normalize_rows: row " + std::to_string(n) +
                          " of slice " + std::to_string(k) +
                          " has nonpositive variance");
      }
      out[k].row(n) /= std::sqrt(v);
    }
  }
  return DemixingTensor(std::move(out));
}

IvagvResult ivagv_solve(const EmpiricalCovariance& cov, const IvagvConfig& cfg) {
  cfg.validate();
  if (!(cov.sigma_min() > 0.0)) {
    throw SingularMatrixError("ivagv_solve: empirical covariance is singular");
  }
  const int K = cov.num_datasets();

  DemixingTensor W = normalize_rows(
      init_demixing(K, cov.num_sources(), cfg.init, cfg.seed), cov);

  SolveTrace trace;
  trace.iterations.reserve(256);
  const auto t0 = Clock::now();

  double cost = cost_reduced(W, cov);
  {
    IterationRecord rec;
    rec.cost = cost;
    trace.iterations.push_back(rec);
  }

  int iter = 0;
  bool converged = false;
  while (iter < cfg.max_iter) {
    const MatrixStack grad = grad_reduced(W, cov);
    double grad_sq = 0.0;
    for (const MatrixXd& g : grad) grad_sq += g.squaredNorm();

    double step = cfg.initial_step;
    int halvings = 0;
    MatrixStack candidate(K);
    DemixingTensor* accepted = nullptr;
    DemixingTensor trial = W;  // storage reused across step trials
    double trial_cost = kInf;
    while (true) {
      bool finite = true;
      for (int k = 0; k < K; ++k) {
        candidate[k] = W.slice(k) - step * grad[k];
        finite = finite && candidate[k].allFinite();
      }
      if (finite) {
        trial = DemixingTensor(candidate);
        trial_cost = cost_reduced(trial, cov);
        if (trial_cost <= cost - cfg.armijo_c1 * step * grad_sq) {
          accepted = &trial;
          break;
        }
      }
      if (halvings >= cfg.max_halvings) break;
      step *= cfg.backtrack_factor;
      ++halvings;
    }
    if (accepted == nullptr) {
      trace.iterations_used = iter;
      trace.wall_seconds = seconds_since(t0);
      throw NumericalError(
          "ivagv_solve: line search found no decrease after " +
              std::to_string(cfg.max_halvings) + " halvings at iteration " +
              std::to_string(iter),
          std::move(trace));
    }

    DemixingTensor W_next = normalize_rows(*accepted, cov);
    const double change = demixing_change(W_next, W);
    W = std::move(W_next);
    cost = cost_reduced(W, cov);
    ++iter;

    IterationRecord rec;
    rec.cost = cost;
    rec.change_demixing = change;
    rec.inner_demixing_steps = halvings + 1;  // step trials, accepted included
    rec.step_size = step;
    rec.grad_sq_norm = grad_sq;
    trace.iterations.push_back(rec);

    if (change <= cfg.delta) {
      converged = true;
      break;
    }
  }

  trace.iterations_used = iter;
  trace.wall_seconds = seconds_since(t0);
  trace.converged = converged;
  return {std::move(W), std::move(trace)};
}

}  // namespace iva
