#include "iva/calculus.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <string>

namespace iva {

namespace {

void check_prox_step(double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError("prox step must be positive and finite");
  }
}

void check_same_shape(const MatrixStack& a, const MatrixStack& b,
                      const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": slice counts differ");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) {
      throw DimensionError(std::string(what) + ": slice " + std::to_string(i) +
                           " shapes differ");
    }
  }
}

}  // namespace

double precision_spectral_norm(const PrecisionTensor& precision) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  double norm = 0.0;
  for (int n = 0; n < precision.num_sources(); ++n) {
    es.compute(precision.slice(n), Eigen::EigenvaluesOnly);
    norm = std::max(norm, std::max(std::abs(es.eigenvalues().minCoeff()),
                                   std::abs(es.eigenvalues().maxCoeff())));
  }
  return norm;
}

double lipschitz_demixing(const PrecisionTensor& precision,
                          const EmpiricalCovariance& cov) {
  if (precision.num_sources() != cov.num_sources() ||
      precision.num_datasets() != cov.num_datasets()) {
    throw DimensionError("precision tensor does not match covariance");
  }
  const double lip = precision_spectral_norm(precision) * cov.max_block_column_norm();
  if (!(lip > 0.0) || !std::isfinite(lip)) {
    throw DomainError("demixing gradient modulus is not positive");
  }
  return lip;
}

LipschitzInfo lipschitz_info(const PrecisionTensor& precision,
                             const EmpiricalCovariance& cov,
                             const RegularizationParams& reg) {
  LipschitzInfo info;
  info.block_column_norm = cov.max_block_column_norm();
  info.precision_norm = precision_spectral_norm(precision);
  info.demixing_modulus = lipschitz_demixing(precision, cov);
  info.precision_modulus = reg.alpha;
  return info;
}

MatrixStack grad_smooth_demixing(const DemixingTensor& demixing,
                                 const PrecisionTensor& precision,
                                 const EmpiricalCovariance& cov) {
  const int K = cov.num_datasets();
  const int N = cov.num_sources();
  if (demixing.num_datasets() != K || demixing.num_sources() != N ||
      precision.num_sources() != N || precision.num_datasets() != K) {
    throw DimensionError("gradient inputs do not match covariance");
  }
  MatrixStack grad(K, MatrixXd::Zero(N, N));
  Eigen::RowVectorXd row(N);
  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      row.setZero();
      const MatrixXd& c = precision.slice(n);
      for (int l = 0; l < K; ++l) {
        row.noalias() += c(k, l) * (demixing.slice(l).row(n) * cov.block(l, k));
      }
      grad[k].row(n) = row;
    }
  }
  return grad;
}

MatrixStack grad_smooth_precision(const DemixingTensor& demixing,
                                  const PrecisionTensor& precision,
                                  const EmpiricalCovariance& cov,
                                  const RegularizationParams& reg) {
  const int K = cov.num_datasets();
  const int N = cov.num_sources();
  if (demixing.num_datasets() != K || demixing.num_sources() != N ||
      precision.num_sources() != N || precision.num_datasets() != K) {
    throw DimensionError("gradient inputs do not match covariance");
  }
  MatrixStack grad(N);
  for (int n = 0; n < N; ++n) {
    MatrixXd g = scv_gram(demixing, cov, n) / 2.0;
    g.diagonal() += reg.alpha * (precision.slice(n).diagonal() -
                                 VectorXd::Ones(K));
    grad[n] = std::move(g);
  }
  return grad;
}

DemixingTensor prox_demixing(const MatrixStack& candidate, double step) {
  check_prox_step(step);
  MatrixStack out(candidate.size());
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    if (!candidate[k].allFinite()) {
      throw DomainError("prox_demixing: slice " + std::to_string(k) +
                        " has non-finite entries");
    }
    Eigen::JacobiSVD<MatrixXd> svd(candidate[k],
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd sigma = svd.singularValues();
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      const double s = sigma(i);
      sigma(i) = (s + std::sqrt(s * s + 4.0 * step)) / 2.0;
    }
    out[k] = svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
  }
  return DemixingTensor(std::move(out));
}

PrecisionTensor prox_precision(const MatrixStack& candidate, double step,
                               const RegularizationParams& reg) {
  check_prox_step(step);
  reg.validate();
  MatrixStack out(candidate.size());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  for (std::size_t n = 0; n < candidate.size(); ++n) {
    if (!candidate[n].allFinite()) {
      throw DomainError("prox_precision: slice " + std::to_string(n) +
                        " has non-finite entries");
    }
    const MatrixXd sym = (candidate[n] + candidate[n].transpose()) / 2.0;
    es.compute(sym);
    VectorXd lambda = es.eigenvalues();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const double l = lambda(i);
      lambda(i) = std::max(reg.epsilon,
                           (l + std::sqrt(l * l + 2.0 * step)) / 2.0);
    }
    MatrixXd c = es.eigenvectors() * lambda.asDiagonal() *
                 es.eigenvectors().transpose();
    out[n] = ((c + c.transpose()) / 2.0).eval();
  }
  return PrecisionTensor(std::move(out));
}

double demixing_change(const DemixingTensor& a, const DemixingTensor& b) {
  check_same_shape(a.slices(), b.slices(), "demixing_change");
  const int N = a.num_sources();
  double worst = 0.0;
  for (int k = 0; k < a.num_datasets(); ++k) {
    const MatrixXd diff = a.slice(k) - b.slice(k);
    for (int n = 0; n < N; ++n) {
      worst = std::max(worst, diff.row(n).squaredNorm());
    }
  }
  return worst / (2.0 * N);
}

double precision_change(const PrecisionTensor& a, const PrecisionTensor& b) {
  check_same_shape(a.slices(), b.slices(), "precision_change");
  const int K = a.num_datasets();
  double worst = 0.0;
  for (int n = 0; n < a.num_sources(); ++n) {
    const MatrixXd diff = a.slice(n) - b.slice(n);
    for (int k = 0; k < K; ++k) {
      worst = std::max(worst, diff.row(k).squaredNorm());
    }
  }
  return worst / (2.0 * K);
}

}  // namespace iva
