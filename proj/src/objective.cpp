#include "iva/objective.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

namespace iva {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const DemixingTensor& w, const PrecisionTensor& c,
                  const EmpiricalCovariance& cov) {
  if (w.num_datasets() != cov.num_datasets() ||
      w.num_sources() != cov.num_sources()) {
    throw DimensionError("demixing tensor does not match covariance");
  }
  if (c.num_sources() != cov.num_sources() ||
      c.num_datasets() != cov.num_datasets()) {
    throw DimensionError("precision tensor does not match covariance");
  }
}

// log det of a positive definite matrix via Cholesky; NaN when the
// factorization fails.
double log_det_pd(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    sum += std::log(llt.matrixL()(i, i));
  }
  return 2.0 * sum;
}

}  // namespace

void RegularizationParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("regularization: alpha must be positive and finite");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("regularization: epsilon must be positive and finite");
  }
}

double cost_smooth(const DemixingTensor& demixing, const PrecisionTensor& precision,
                   const EmpiricalCovariance& cov, const RegularizationParams& reg) {
  check_shapes(demixing, precision, cov);
  const int N = cov.num_sources();
  const int K = cov.num_datasets();
  double acc = 0.0;
  for (int n = 0; n < N; ++n) {
    const MatrixXd gram = scv_gram(demixing, cov, n);
    const MatrixXd& c = precision.slice(n);
    // tr(C G) for symmetric C, G.
    acc += (c.array() * gram.array()).sum();
    acc += reg.alpha *
           (c.diagonal() - VectorXd::Ones(K)).squaredNorm();
  }
  return acc / 2.0;
}

double cost_demixing_barrier(const DemixingTensor& demixing) {
  double acc = 0.0;
  for (int k = 0; k < demixing.num_datasets(); ++k) {
    const double lad = log_abs_det(demixing.slice(k));
    if (lad == -kInf) return kInf;
    acc -= lad;
  }
  return acc;
}

double cost_precision_barrier(const PrecisionTensor& precision,
                              const RegularizationParams& reg) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  double acc = 0.0;
  for (int n = 0; n < precision.num_sources(); ++n) {
    const MatrixXd& c = precision.slice(n);
    es.compute(c, Eigen::EigenvaluesOnly);
    const double lambda_min = es.eigenvalues().minCoeff();
    // Roundoff slack: slices produced at the floor can dip below it by a few
    // ulp of the slice norm after re-symmetrization.
    if (lambda_min < reg.epsilon - 1e-12 * std::max(1.0, c.norm())) {
      return kInf;
    }
    double ld = log_det_pd(c);
    if (std::isnan(ld)) {
      // Feasible up to roundoff but Cholesky failed: eigenvalues are within
      // slack of the floor, so evaluate the log det from them directly.
      ld = es.eigenvalues().array().max(reg.epsilon).log().sum();
    }
    acc -= ld / 2.0;
  }
  return acc;
}

double cost_regularized(const DemixingTensor& demixing,
                        const PrecisionTensor& precision,
                        const EmpiricalCovariance& cov,
                        const RegularizationParams& reg) {
  reg.validate();
  const double f = cost_demixing_barrier(demixing);
  if (f == kInf) return kInf;
  const double g = cost_precision_barrier(precision, reg);
  if (g == kInf) return kInf;
  return cost_smooth(demixing, precision, cov, reg) + f + g;
}

double cost_likelihood(const DemixingTensor& demixing,
                       const PrecisionTensor& precision,
                       const EmpiricalCovariance& cov) {
  check_shapes(demixing, precision, cov);
  const double f = cost_demixing_barrier(demixing);
  if (f == kInf) return kInf;
  double acc = f;
  for (int n = 0; n < cov.num_sources(); ++n) {
    const MatrixXd& c = precision.slice(n);
    const double ld = log_det_pd(c);
    if (std::isnan(ld)) return kInf;
    const MatrixXd gram = scv_gram(demixing, cov, n);
    acc += ((c.array() * gram.array()).sum() - ld) / 2.0;
  }
  return acc;
}

double cost_reduced(const DemixingTensor& demixing, const EmpiricalCovariance& cov) {
  if (demixing.num_datasets() != cov.num_datasets() ||
      demixing.num_sources() != cov.num_sources()) {
    throw DimensionError("demixing tensor does not match covariance");
  }
  const double f = cost_demixing_barrier(demixing);
  if (f == kInf) return kInf;
  double acc = f;
  for (int n = 0; n < cov.num_sources(); ++n) {
    const double ld = log_det_pd(scv_gram(demixing, cov, n));
    if (std::isnan(ld)) return kInf;
    acc += ld / 2.0;
  }
  return acc;
}

PrecisionTensor optimal_precision(const DemixingTensor& demixing,
                                  const EmpiricalCovariance& cov) {
  if (demixing.num_datasets() != cov.num_datasets() ||
      demixing.num_sources() != cov.num_sources()) {
    throw DimensionError("demixing tensor does not match covariance");
  }
  const int N = cov.num_sources();
  MatrixStack slices(N);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  for (int n = 0; n < N; ++n) {
    const MatrixXd gram = scv_gram(demixing, cov, n);
    es.compute(gram);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw SingularMatrixError("optimal_precision: source " + std::to_string(n) +
                                " has a singular Gram matrix");
    }
    MatrixXd inv = es.eigenvectors() *
                   es.eigenvalues().cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
    slices[n] = ((inv + inv.transpose()) / 2.0).eval();
  }
  return PrecisionTensor(std::move(slices));
}

}  // namespace iva
