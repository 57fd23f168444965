#include "iva/palm_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "iva/rng.hpp"

namespace iva {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

DemixingTensor init_demixing(int num_datasets, int num_sources, InitMode mode,
                             std::uint64_t seed) {
  MatrixStack slices(num_datasets);
  if (mode == InitMode::Identity) {
    for (auto& w : slices) w = MatrixXd::Identity(num_sources, num_sources);
    return DemixingTensor(std::move(slices));
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < num_datasets; ++k) {
    auto rng = stream_rng(seed, "init", static_cast<std::uint64_t>(k));
    MatrixXd m(num_sources, num_sources);
    for (int i = 0; i < num_sources; ++i) {
      for (int j = 0; j < num_sources; ++j) m(i, j) = gauss(rng);
    }
    Eigen::HouseholderQR<MatrixXd> qr(m);
    slices[k] = qr.householderQ();
  }
  return DemixingTensor(std::move(slices));
}

void PalmConfig::validate() const {
  if (!(gamma_demixing > 0.0) || !(gamma_demixing < 1.0)) {
    throw ConfigError("gamma_demixing must lie in (0, 1)");
  }
  if (!(gamma_precision > 0.0) || !(gamma_precision < 2.0)) {
    throw ConfigError("gamma_precision must lie in (0, 2)");
  }
  regularization().validate();
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("delta must be positive and finite");
  }
  if (max_outer < 1 || max_inner_demixing < 1 || max_inner_precision < 1) {
    throw ConfigError("iteration caps must be at least 1");
  }
  // The prox floor must sit strictly below the smallest eigenvalue the
  // precision prox can produce, or the floor clamp would bite at every step.
  if (!(epsilon < std::sqrt(gamma_precision / (2.0 * alpha)))) {
    throw ConfigError("epsilon must be below sqrt(gamma_precision / (2 alpha))");
  }
}

std::pair<DemixingTensor, PrecisionTensor> init_point(int num_datasets,
                                                      int num_sources,
                                                      const PalmConfig& cfg) {
  DemixingTensor w = init_demixing(num_datasets, num_sources, cfg.init, cfg.seed);
  PrecisionTensor c = PrecisionTensor::identity(num_sources, num_datasets);
  return {std::move(w), std::move(c)};
}

PalmResult palm_solve(const EmpiricalCovariance& cov, const PalmConfig& cfg,
                      const PalmObserver& observer) {
  cfg.validate();
  if (!(cov.sigma_min() > 0.0)) {
    throw SingularMatrixError("palm_solve: empirical covariance is singular");
  }
  const RegularizationParams reg = cfg.regularization();
  const int K = cov.num_datasets();
  const int N = cov.num_sources();
  const double step_precision = cfg.gamma_precision / cfg.alpha;

  auto [W, C] = init_point(K, N, cfg);

  SolveTrace trace;
  trace.iterations.reserve(256);
  const auto t0 = Clock::now();

  auto record = [&](double cost, double dw, double dc, int w_steps,
                    int c_steps) {
    IterationRecord rec;
    rec.cost = cost;
    rec.change_demixing = dw;
    rec.change_precision = dc;
    rec.precision_norm = precision_spectral_norm(C);
    rec.lipschitz_demixing = rec.precision_norm * cov.max_block_column_norm();
    rec.inner_demixing_steps = w_steps;
    rec.inner_precision_steps = c_steps;
    trace.iterations.push_back(rec);
  };

  record(cost_regularized(W, C, cov, reg), 0.0, 0.0, 0, 0);
  if (observer) observer(0, W, C);

  auto fail = [&](const std::string& why, int outer) -> void {
    trace.iterations_used = outer;
    trace.wall_seconds = seconds_since(t0);
    throw NumericalError("palm_solve: " + why + " at outer iteration " +
                         std::to_string(outer), std::move(trace));
  };

  int outer = 0;
  bool converged = false;
  while (outer < cfg.max_outer) {
    const DemixingTensor W_before = W;
    const PrecisionTensor C_before = C;

    try {
      const double step_demixing =
          cfg.gamma_demixing / lipschitz_demixing(C, cov);

      int w_steps = 0;
      double inner_change = kInf;
      MatrixStack candidate(K);
      while (inner_change > cfg.delta && w_steps < cfg.max_inner_demixing) {
        const MatrixStack grad = grad_smooth_demixing(W, C, cov);
        for (int k = 0; k < K; ++k) {
          candidate[k] = W.slice(k) - step_demixing * grad[k];
        }
        DemixingTensor W_next = prox_demixing(candidate, step_demixing);
        inner_change = demixing_change(W_next, W);
        W = std::move(W_next);
        ++w_steps;
      }

      int c_steps = 0;
      inner_change = kInf;
      candidate.resize(N);
      while (inner_change > cfg.delta && c_steps < cfg.max_inner_precision) {
        const MatrixStack grad = grad_smooth_precision(W, C, cov, reg);
        for (int n = 0; n < N; ++n) {
          candidate[n] = C.slice(n) - step_precision * grad[n];
        }
        PrecisionTensor C_next = prox_precision(candidate, step_precision, reg);
        inner_change = precision_change(C_next, C);
        C = std::move(C_next);
        ++c_steps;
      }

      ++outer;
      const double dw = demixing_change(W, W_before);
      const double dc = precision_change(C, C_before);
      const double cost = cost_regularized(W, C, cov, reg);
      record(cost, dw, dc, w_steps, c_steps);
      if (observer) observer(outer, W, C);
      if (!std::isfinite(cost)) fail("objective became non-finite", outer);
      if (std::max(dw, dc) <= cfg.delta) {
        converged = true;
        break;
      }
    } catch (const DomainError& e) {
      fail(std::string("iterates left the computable domain (") + e.what() +
               ")",
           outer);
    }
  }

  trace.iterations_used = outer;
  trace.wall_seconds = seconds_since(t0);
  trace.converged = converged;
  return {std::move(W), std::move(C), std::move(trace)};
}

double stationarity_residual(const DemixingTensor& demixing,
                             const PrecisionTensor& precision,
                             const EmpiricalCovariance& cov,
                             const PalmConfig& cfg) {
  cfg.validate();
  const RegularizationParams reg = cfg.regularization();
  const int K = cov.num_datasets();
  const int N = cov.num_sources();

  const double step_w = cfg.gamma_demixing / lipschitz_demixing(precision, cov);
  const MatrixStack grad_w = grad_smooth_demixing(demixing, precision, cov);
  MatrixStack candidate(K);
  for (int k = 0; k < K; ++k) {
    candidate[k] = demixing.slice(k) - step_w * grad_w[k];
  }
  const DemixingTensor w_next = prox_demixing(candidate, step_w);

  const double step_c = cfg.gamma_precision / cfg.alpha;
  const MatrixStack grad_c = grad_smooth_precision(w_next, precision, cov, reg);
  candidate.resize(N);
  for (int n = 0; n < N; ++n) {
    candidate[n] = precision.slice(n) - step_c * grad_c[n];
  }
  const PrecisionTensor c_next = prox_precision(candidate, step_c, reg);

  double sq = 0.0;
  for (int k = 0; k < K; ++k) {
    sq += (w_next.slice(k) - demixing.slice(k)).squaredNorm();
  }
  for (int n = 0; n < N; ++n) {
    sq += (c_next.slice(n) - precision.slice(n)).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace iva
