#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "iva/palm_solver.hpp"
#include "iva/synthgen.hpp"
#include "test_support.hpp"

using namespace iva;
namespace ts = testsupport;

namespace {

// Small whitened instance of the synthetic benchmark family.
EmpiricalCovariance small_instance(CaseLabel c, int K, int N, int V,
                                   std::uint64_t seed) {
  const Dims dims(K, N, V);
  const GroundTruth truth = make_ground_truth(c, dims, seed);
  const MatrixStack sources = sample_sources(truth.scv_covariances, dims, seed);
  const DatasetStack observed = mix(truth.mixing, sources);
  const auto [white, info] = whiten(center(observed));
  return empirical_covariance(white);
}

}  // namespace

TEST_CASE("solver config validation catches bad parameters") {
  PalmConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  PalmConfig bad = cfg;
  bad.gamma_demixing = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.gamma_demixing = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.gamma_precision = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.max_inner_demixing = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  // Floor above the smallest eigenvalue the precision prox can produce.
  bad = cfg;
  bad.epsilon = 1.1;
  bad.gamma_precision = 1.99;
  bad.alpha = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("initial point modes") {
  PalmConfig cfg;
  SUBCASE("identity") {
    const auto [w, c] = init_point(3, 4, cfg);
    for (int k = 0; k < 3; ++k) {
      CHECK((w.slice(k) - MatrixXd::Identity(4, 4)).norm() == 0.0);
    }
    for (int n = 0; n < 4; ++n) {
      CHECK((c.slice(n) - MatrixXd::Identity(3, 3)).norm() == 0.0);
    }
  }
  SUBCASE("random orthogonal") {
    cfg.init = InitMode::RandomOrthogonal;
    cfg.seed = 17;
    const auto [w, c] = init_point(3, 4, cfg);
    for (int k = 0; k < 3; ++k) {
      CHECK((w.slice(k).transpose() * w.slice(k) - MatrixXd::Identity(4, 4))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
    // Distinct slices, deterministic draw.
    CHECK((w.slice(0) - w.slice(1)).norm() > 1e-3);
    const auto [w2, c2] = init_point(3, 4, cfg);
    CHECK((w.slice(0) - w2.slice(0)).norm() == 0.0);
    cfg.seed = 18;
    const auto [w3, c3] = init_point(3, 4, cfg);
    CHECK((w.slice(0) - w3.slice(0)).norm() > 1e-6);
  }
}

TEST_CASE("palm converges on a small instance with a clean trace") {
  const int K = 3, N = 4, V = 2000;
  const EmpiricalCovariance cov = small_instance(CaseLabel::B, K, N, V, 7);
  PalmConfig cfg;

  std::vector<int> observed_iters;
  const PalmResult res = palm_solve(
      cov, cfg, [&](int it, const DemixingTensor&, const PrecisionTensor&) {
        observed_iters.push_back(it);
      });

  CHECK(res.trace.converged);
  CHECK(res.trace.iterations_used >= 1);
  CHECK(res.trace.iterations_used < cfg.max_outer);
  CHECK(static_cast<int>(res.trace.iterations.size()) ==
        res.trace.iterations_used + 1);
  CHECK(res.trace.wall_seconds > 0.0);

  // Observer saw every iteration in order, starting at the initial point.
  REQUIRE(observed_iters.size() == res.trace.iterations.size());
  for (std::size_t i = 0; i < observed_iters.size(); ++i) {
    CHECK(observed_iters[i] == static_cast<int>(i));
  }

  // Monotone descent with a tight slack, and a finite cost throughout.
  for (std::size_t i = 1; i < res.trace.iterations.size(); ++i) {
    CHECK(std::isfinite(res.trace.iterations[i].cost));
    CHECK(res.trace.iterations[i].cost <=
          res.trace.iterations[i - 1].cost + 1e-10);
  }

  // Final change metrics meet the threshold.
  const IterationRecord& last = res.trace.iterations.back();
  CHECK(std::max(last.change_demixing, last.change_precision) <= cfg.delta);

  // Iterates are feasible.
  CHECK(res.demixing.nonsingular());
  CHECK(res.precision.feasible(cfg.epsilon, 1e-13));

  // Precision norms stay under the invariant ceiling, and the recorded
  // moduli are consistent with it.
  const double rho0 = res.trace.iterations.front().precision_norm;
  const double ceiling = std::max(
      rho0, K * (1.0 + std::sqrt(1.0 / (2.0 * cfg.alpha * cfg.gamma_precision))));
  for (const IterationRecord& rec : res.trace.iterations) {
    CHECK(rec.precision_norm <= ceiling * (1.0 + 1e-12));
    CHECK(rec.lipschitz_demixing ==
          doctest::Approx(rec.precision_norm * cov.max_block_column_norm())
              .epsilon(1e-12));
    CHECK(rec.lipschitz_demixing <=
          ceiling * cov.max_block_column_norm() * (1.0 + 1e-12));
    CHECK(rec.lipschitz_demixing >=
          cfg.epsilon * cov.max_block_column_norm() * (1.0 - 1e-12));
    CHECK(rec.inner_demixing_steps <= cfg.max_inner_demixing);
    CHECK(rec.inner_precision_steps <= cfg.max_inner_precision);
  }
}

TEST_CASE("palm is deterministic") {
  const EmpiricalCovariance cov = small_instance(CaseLabel::D, 2, 3, 1000, 3);
  PalmConfig cfg;
  const PalmResult a = palm_solve(cov, cfg);
  const PalmResult b = palm_solve(cov, cfg);
  CHECK(a.trace.iterations_used == b.trace.iterations_used);
  for (int k = 0; k < 2; ++k) {
    CHECK((a.demixing.slice(k) - b.demixing.slice(k)).norm() == 0.0);
  }
  for (int n = 0; n < 3; ++n) {
    CHECK((a.precision.slice(n) - b.precision.slice(n)).norm() == 0.0);
  }
  for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
    CHECK(a.trace.iterations[i].cost == b.trace.iterations[i].cost);
  }
}

TEST_CASE("palm rejects singular covariances") {
  // Fewer samples than stacked channels: the sample covariance is flat.
  auto rng = ts::test_rng(5);
  const MatrixXd x = ts::gaussian_matrix(rng, 6, 4);
  const EmpiricalCovariance cov((x * x.transpose()) / 4.0, 2, 3);
  CHECK(cov.sigma_min() <= 0.0);
  CHECK_THROWS_AS(palm_solve(cov, PalmConfig{}), SingularMatrixError);
}

TEST_CASE("iteration cap halts without convergence") {
  const EmpiricalCovariance cov = small_instance(CaseLabel::B, 2, 3, 1000, 11);
  PalmConfig cfg;
  cfg.max_outer = 3;
  const PalmResult res = palm_solve(cov, cfg);
  CHECK_FALSE(res.trace.converged);
  CHECK(res.trace.iterations_used == 3);
  CHECK(res.trace.iterations.size() == 4);
}

TEST_CASE("stationarity residual contracts as the solver converges") {
  const int K = 2, N = 3;
  const EmpiricalCovariance cov = small_instance(CaseLabel::D, K, N, 1500, 13);
  PalmConfig cfg;

  const auto [w0, c0] = init_point(K, N, cfg);
  const double at_start = stationarity_residual(w0, c0, cov, cfg);

  const PalmResult res = palm_solve(cov, cfg);
  const double at_end =
      stationarity_residual(res.demixing, res.precision, cov, cfg);
  CHECK(at_end < 1e-4);
  CHECK(at_end < at_start / 100.0);
}

TEST_CASE("numerical error carries its partial trace") {
  SolveTrace t;
  t.iterations.push_back({});
  t.iterations_used = 1;
  const NumericalError err("boom", t);
  CHECK(err.trace().iterations.size() == 1);
  CHECK(err.trace().iterations_used == 1);
}
