#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "iva/baseline_ivagv.hpp"
#include "iva/evaluation.hpp"
#include "iva/synthgen.hpp"
#include "test_support.hpp"

using namespace iva;
namespace ts = testsupport;

namespace {

EmpiricalCovariance small_instance(CaseLabel c, int K, int N, int V,
                                   std::uint64_t seed) {
  const Dims dims(K, N, V);
  const GroundTruth truth = make_ground_truth(c, dims, seed);
  const MatrixStack sources = sample_sources(truth.scv_covariances, dims, seed);
  const auto [white, info] = whiten(center(mix(truth.mixing, sources)));
  return empirical_covariance(white);
}

}  // namespace

TEST_CASE("baseline config validation") {
  IvagvConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  IvagvConfig bad = cfg;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.armijo_c1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.backtrack_factor = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.initial_step = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("reduced gradient matches finite differences") {
  auto rng = ts::test_rng(201);
  for (int rep = 0; rep < 10; ++rep) {
    const int K = 3, N = 4;
    const EmpiricalCovariance cov =
        ts::synthetic_covariance(400 + rep, K, N, 80);
    const DemixingTensor w(ts::random_nonsingular_stack(rng, K, N));

    const MatrixStack got = grad_reduced(w, cov);
    const MatrixStack want = ts::finite_difference(
        w.slices(), [&](const MatrixStack& slices) {
          return cost_reduced(DemixingTensor(slices), cov);
        });
    CHECK(ts::relative_stack_error(got, want) < 1e-5);
  }
}

TEST_CASE("reduced gradient rejects singular demixing slices") {
  const EmpiricalCovariance cov = ts::synthetic_covariance(11, 2, 3, 40);
  MatrixStack w = DemixingTensor::identity(2, 3).slices();
  w[0].row(2) = w[0].row(1);  // slice 0 singular, but every source Gram stays PD
  CHECK_THROWS_AS(grad_reduced(DemixingTensor(w), cov), SingularMatrixError);
}

TEST_CASE("row normalization yields unit estimated variances") {
  auto rng = ts::test_rng(211);
  const int K = 3, N = 4;
  const EmpiricalCovariance cov = ts::synthetic_covariance(21, K, N, 100);
  const DemixingTensor w(ts::random_nonsingular_stack(rng, K, N));
  const DemixingTensor scaled = normalize_rows(w, cov);

  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      const double v = scaled.slice(k).row(n) * cov.block(k, k) *
                       scaled.slice(k).row(n).transpose();
      CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  // The profiled likelihood is invariant to row scaling.
  CHECK(cost_reduced(scaled, cov) ==
        doctest::Approx(cost_reduced(w, cov)).epsilon(1e-10));

  // Idempotent once normalized.
  const DemixingTensor twice = normalize_rows(scaled, cov);
  CHECK((twice.slice(0) - scaled.slice(0)).cwiseAbs().maxCoeff() < 1e-14);

  MatrixStack zero_row = w.slices();
  zero_row[1].row(2).setZero();
  CHECK_THROWS_AS(normalize_rows(DemixingTensor(zero_row), cov), DomainError);
}

TEST_CASE("baseline converges with monotone descent and sound line search") {
  const EmpiricalCovariance cov = small_instance(CaseLabel::B, 3, 4, 2000, 7);
  IvagvConfig cfg;
  const IvagvResult res = ivagv_solve(cov, cfg);

  CHECK(res.trace.converged);
  CHECK(res.trace.iterations_used >= 1);
  CHECK(static_cast<int>(res.trace.iterations.size()) ==
        res.trace.iterations_used + 1);

  for (std::size_t i = 1; i < res.trace.iterations.size(); ++i) {
    const IterationRecord& prev = res.trace.iterations[i - 1];
    const IterationRecord& cur = res.trace.iterations[i];
    // Armijo certificate, with slack for the post-step row normalization.
    CHECK(cur.cost <=
          prev.cost - cfg.armijo_c1 * cur.step_size * cur.grad_sq_norm + 1e-9);
    CHECK(cur.step_size > 0.0);
    CHECK(cur.step_size <= cfg.initial_step);
  }
  CHECK(res.trace.iterations.back().change_demixing <= cfg.delta);

  // Output rows are normalized.
  for (int k = 0; k < 3; ++k) {
    for (int n = 0; n < 4; ++n) {
      const double v = res.demixing.slice(k).row(n) * cov.block(k, k) *
                       res.demixing.slice(k).row(n).transpose();
      CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("baseline separates a hard-case instance at benchmark scale") {
  const Dims dims(5, 10, 10000);
  const GroundTruth truth = make_ground_truth(CaseLabel::D, dims, 31);
  const MatrixStack sources =
      sample_sources(truth.scv_covariances, dims, 31);
  const auto [white, info] = whiten(center(mix(truth.mixing, sources)));
  const IvagvResult res = ivagv_solve(empirical_covariance(white), {});
  CHECK(res.trace.converged);
  CHECK(score_in_original_space(res.demixing, info, truth.mixing) < 2e-2);
}

TEST_CASE("baseline is deterministic") {
  const EmpiricalCovariance cov = small_instance(CaseLabel::D, 2, 3, 1000, 9);
  IvagvConfig cfg;
  const IvagvResult a = ivagv_solve(cov, cfg);
  const IvagvResult b = ivagv_solve(cov, cfg);
  CHECK(a.trace.iterations_used == b.trace.iterations_used);
  for (int k = 0; k < 2; ++k) {
    CHECK((a.demixing.slice(k) - b.demixing.slice(k)).norm() == 0.0);
  }
}

TEST_CASE("baseline rejects singular covariances") {
  auto rng = ts::test_rng(15);
  const MatrixXd x = ts::gaussian_matrix(rng, 6, 4);
  const EmpiricalCovariance cov((x * x.transpose()) / 4.0, 2, 3);
  CHECK_THROWS_AS(ivagv_solve(cov, IvagvConfig{}), SingularMatrixError);
}

TEST_CASE("baseline iteration cap halts without convergence") {
  const EmpiricalCovariance cov = small_instance(CaseLabel::B, 2, 3, 1000, 19);
  IvagvConfig cfg;
  cfg.max_iter = 2;
  const IvagvResult res = ivagv_solve(cov, cfg);
  CHECK_FALSE(res.trace.converged);
  CHECK(res.trace.iterations_used == 2);
}
