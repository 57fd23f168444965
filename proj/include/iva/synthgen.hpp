#pragma once

#include <cstdint>
#include <string>

#include "iva/tensor_model.hpp"

namespace iva {

// Benchmark difficulty grid: correlation variability (lambda) low/high
// crossed with mean correlation strength (rho range) low/high.
enum class CaseLabel { A, B, C, D };

std::string to_string(CaseLabel c);
CaseLabel case_from_string(const std::string& s);

// Parameters of the random covariance model for one problem instance. Every
// source n gets the covariance
//   rho_n * ones + (lambda / rank) * Q_n Q_n^T + eta_n * I,
// with Q_n a fresh K x rank standard Gaussian draw and eta_n chosen so the
// diagonal equals one.
struct CovModelParams {
  VectorXd rho;            // per-source mean correlation, each in [0, 1)
  double lambda = 0.0;     // variability weight, >= 0
  int rank = 1;            // columns of the variability factor
  std::uint64_t seed = 0;

  void validate() const;   // needs eta_n = 1 - rho_n - lambda >= 0 for all n
};

// What the generator knows and the estimator must recover.
struct GroundTruth {
  MatrixStack mixing;           // K slices, N x N
  MatrixStack scv_covariances;  // N slices, K x K positive definite
  std::string case_label;
};

// Case presets: rho spread evenly over the case's range (a single source
// sits at the lower endpoint), lambda per case, rank = K + 10.
CovModelParams make_case(CaseLabel c, const Dims& dims, std::uint64_t seed);

MatrixStack make_covariances(const CovModelParams& params, int num_datasets);

// Square mixing matrices with independent standard Gaussian entries,
// redrawn while badly conditioned.
MatrixStack make_mixing(const Dims& dims, std::uint64_t seed);

// Zero-mean Gaussian sources: source n's cross-dataset vector has covariance
// covariances[n], independent across samples and sources. Returns K slices
// of shape N x V.
MatrixStack sample_sources(const MatrixStack& covariances, const Dims& dims,
                           std::uint64_t seed);

// Applies the per-dataset mixing to the sources.
DatasetStack mix(const MatrixStack& mixing, const MatrixStack& sources);

// Full instance draw: covariances plus mixing for one case.
GroundTruth make_ground_truth(CaseLabel c, const Dims& dims, std::uint64_t seed);

}  // namespace iva
