#include "iva/synthgen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "iva/rng.hpp"

namespace iva {

namespace {

struct CasePreset {
  double rho_lo;
  double rho_hi;
  double lambda;
};

CasePreset preset(CaseLabel c) {
  switch (c) {
    case CaseLabel::A: return {0.2, 0.3, 0.04};
    case CaseLabel::B: return {0.2, 0.3, 0.25};
    case CaseLabel::C: return {0.6, 0.7, 0.04};
    case CaseLabel::D: return {0.6, 0.7, 0.25};
  }
  throw ConfigError("unknown case label");
}

MatrixXd gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  }
  return m;
}

}  // namespace

std::string to_string(CaseLabel c) {
  switch (c) {
    case CaseLabel::A: return "A";
    case CaseLabel::B: return "B";
    case CaseLabel::C: return "C";
    case CaseLabel::D: return "D";
  }
  throw ConfigError("unknown case label");
}

CaseLabel case_from_string(const std::string& s) {
  if (s == "A" || s == "a") return CaseLabel::A;
  if (s == "B" || s == "b") return CaseLabel::B;
  if (s == "C" || s == "c") return CaseLabel::C;
  if (s == "D" || s == "d") return CaseLabel::D;
  throw ConfigError("unknown case label '" + s + "' (expected A, B, C or D)");
}

void CovModelParams::validate() const {
  if (rho.size() < 1) throw ConfigError("covariance model: rho is empty");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("covariance model: lambda must be nonnegative");
  }
  if (rank < 1) throw ConfigError("covariance model: rank must be at least 1");
  for (Eigen::Index n = 0; n < rho.size(); ++n) {
    if (!(rho(n) >= 0.0) || !(rho(n) < 1.0)) {
      throw ConfigError("covariance model: rho must lie in [0, 1)");
    }
    if (rho(n) + lambda > 1.0) {
      throw ConfigError(
          "covariance model: rho + lambda must not exceed 1 (source " +
          std::to_string(n) + " would get a negative diagonal correction)");
    }
  }
}

CovModelParams make_case(CaseLabel c, const Dims& dims, std::uint64_t seed) {
  const CasePreset p = preset(c);
  CovModelParams params;
  params.rho.resize(dims.N);
  if (dims.N == 1) {
    params.rho(0) = p.rho_lo;
  } else {
    for (int n = 0; n < dims.N; ++n) {
      params.rho(n) = p.rho_lo + (p.rho_hi - p.rho_lo) * n / (dims.N - 1.0);
    }
  }
  params.lambda = p.lambda;
  params.rank = dims.K + 10;
  params.seed = seed;
  params.validate();
  return params;
}

MatrixStack make_covariances(const CovModelParams& params, int num_datasets) {
  params.validate();
  if (num_datasets < 1) {
    throw DimensionError("make_covariances: need at least one dataset");
  }
  const int K = num_datasets;
  const int N = static_cast<int>(params.rho.size());
  MatrixStack sigma(N);
  for (int n = 0; n < N; ++n) {
    auto rng = stream_rng(params.seed, "sigma", static_cast<std::uint64_t>(n));
    const MatrixXd q = gaussian_matrix(rng, K, params.rank);
    const double eta = 1.0 - params.rho(n) - params.lambda;
    MatrixXd s = params.rho(n) * MatrixXd::Ones(K, K) +
                 (params.lambda / params.rank) * (q * q.transpose()) +
                 eta * MatrixXd::Identity(K, K);
    sigma[n] = ((s + s.transpose()) / 2.0).eval();
  }
  return sigma;
}

MatrixStack make_mixing(const Dims& dims, std::uint64_t seed) {
  constexpr double kMaxCondition = 1e8;
  constexpr int kMaxAttempts = 1000;
  MatrixStack mixing(dims.K);
  for (int k = 0; k < dims.K; ++k) {
    auto rng = stream_rng(seed, "mixing", static_cast<std::uint64_t>(k));
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      MatrixXd a = gaussian_matrix(rng, dims.N, dims.N);
      Eigen::JacobiSVD<MatrixXd> svd(a);
      const double smin = svd.singularValues().minCoeff();
      const double smax = svd.singularValues().maxCoeff();
      if (smin > 0.0 && smax / smin <= kMaxCondition) {
        mixing[k] = std::move(a);
        ok = true;
      }
    }
    if (!ok) {
      throw SingularMatrixError("make_mixing: could not draw a well-conditioned "
                                "matrix for dataset " + std::to_string(k));
    }
  }
  return mixing;
}

MatrixStack sample_sources(const MatrixStack& covariances, const Dims& dims,
                           std::uint64_t seed) {
  if (static_cast<int>(covariances.size()) != dims.N) {
    throw DimensionError("sample_sources: need one covariance per source");
  }
  MatrixStack sources(dims.K, MatrixXd(dims.N, dims.V));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int n = 0; n < dims.N; ++n) {
    const MatrixXd& sig = covariances[n];
    if (sig.rows() != dims.K || sig.cols() != dims.K) {
      throw DimensionError("sample_sources: covariance " + std::to_string(n) +
                           " must be K x K");
    }
    Eigen::LLT<MatrixXd> llt(sig);
    if (llt.info() != Eigen::Success) {
      throw SingularMatrixError("sample_sources: covariance " +
                                std::to_string(n) +
                                " is not positive definite");
    }
    auto rng = stream_rng(seed, "sources", static_cast<std::uint64_t>(n));
    MatrixXd z(dims.K, dims.V);
    for (int v = 0; v < dims.V; ++v) {
      for (int k = 0; k < dims.K; ++k) z(k, v) = gauss(rng);
    }
    const MatrixXd x = llt.matrixL() * z;
    for (int k = 0; k < dims.K; ++k) sources[k].row(n) = x.row(k);
  }
  return sources;
}

DatasetStack mix(const MatrixStack& mixing, const MatrixStack& sources) {
  if (mixing.size() != sources.size() || mixing.empty()) {
    throw DimensionError("mix: need one mixing matrix per source slice");
  }
  MatrixStack observed(mixing.size());
  for (std::size_t k = 0; k < mixing.size(); ++k) {
    if (mixing[k].rows() != sources[k].rows() ||
        mixing[k].rows() != mixing[k].cols()) {
      throw DimensionError("mix: mixing slice " + std::to_string(k) +
                           " does not match sources");
    }
    observed[k] = mixing[k] * sources[k];
  }
  return stack(observed);
}

GroundTruth make_ground_truth(CaseLabel c, const Dims& dims, std::uint64_t seed) {
  GroundTruth gt;
  gt.scv_covariances = make_covariances(make_case(c, dims, seed), dims.K);
  gt.mixing = make_mixing(dims, seed);
  gt.case_label = to_string(c);
  return gt;
}

}  // namespace iva
