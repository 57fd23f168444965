#include "iva/tensor_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

namespace iva {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_square_stack(const MatrixStack& slices, const char* what) {
  if (slices.empty()) {
    throw DimensionError(std::string(what) + ": empty slice list");
  }
  const Eigen::Index n = slices[0].rows();
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (slices[i].rows() != n || slices[i].cols() != n) {
      throw DimensionError(std::string(what) + ": slice " + std::to_string(i) +
                           " is not square of matching size");
    }
    if (!slices[i].allFinite()) {
      throw DomainError(std::string(what) + ": slice " + std::to_string(i) +
                        " has non-finite entries");
    }
  }
}

}  // namespace

Dims::Dims(int K_, int N_, int V_) : K(K_), N(N_), V(V_) {
  if (K < 1 || N < 1 || V < 1) {
    throw DimensionError("dims must satisfy K >= 1, N >= 1, V >= 1 (got K=" +
                         std::to_string(K) + ", N=" + std::to_string(N) +
                         ", V=" + std::to_string(V) + ")");
  }
}

DatasetStack::DatasetStack(Dims dims, MatrixXd stacked)
    : dims_(dims), stacked_(std::move(stacked)) {
  const Eigen::Index rows = static_cast<Eigen::Index>(dims_.K) * dims_.N;
  if (stacked_.rows() != rows || stacked_.cols() != dims_.V) {
    throw DimensionError("stacked data must be (K*N) x V");
  }
}

void DatasetStack::check_dataset_index(int k) const {
  if (k < 0 || k >= dims_.K) {
    throw DimensionError("dataset index " + std::to_string(k) +
                         " out of range [0, " + std::to_string(dims_.K) + ")");
  }
}

DemixingTensor::DemixingTensor(MatrixStack slices) : slices_(std::move(slices)) {
  check_square_stack(slices_, "demixing tensor");
}

DemixingTensor DemixingTensor::identity(int num_datasets, int num_sources) {
  if (num_datasets < 1 || num_sources < 1) {
    throw DimensionError("demixing tensor needs at least one dataset and source");
  }
  MatrixStack slices(num_datasets, MatrixXd::Identity(num_sources, num_sources));
  return DemixingTensor(std::move(slices));
}

bool DemixingTensor::nonsingular(double min_abs_det) const {
  const double floor = std::log(min_abs_det);
  for (const MatrixXd& w : slices_) {
    if (!(log_abs_det(w) > floor)) return false;
  }
  return true;
}

PrecisionTensor::PrecisionTensor(MatrixStack slices) : slices_(std::move(slices)) {
  check_square_stack(slices_, "precision tensor");
  for (std::size_t n = 0; n < slices_.size(); ++n) {
    const MatrixXd& c = slices_[n];
    const double asym = (c - c.transpose()).norm();
    if (asym > 1e-12 * std::max(1.0, c.norm())) {
      throw DimensionError("precision tensor: slice " + std::to_string(n) +
                           " is not symmetric");
    }
  }
}

PrecisionTensor PrecisionTensor::identity(int num_sources, int num_datasets) {
  if (num_sources < 1 || num_datasets < 1) {
    throw DimensionError("precision tensor needs at least one source and dataset");
  }
  MatrixStack slices(num_sources, MatrixXd::Identity(num_datasets, num_datasets));
  return PrecisionTensor(std::move(slices));
}

bool PrecisionTensor::feasible(double floor, double tol) const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  for (const MatrixXd& c : slices_) {
    es.compute(c, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < floor - tol) return false;
  }
  return true;
}

EmpiricalCovariance::EmpiricalCovariance(MatrixXd matrix, int num_datasets,
                                         int num_sources)
    : K_(num_datasets), N_(num_sources), matrix_(std::move(matrix)) {
  if (K_ < 1 || N_ < 1) {
    throw DimensionError("covariance needs at least one dataset and source");
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(K_) * N_;
  if (matrix_.rows() != dim || matrix_.cols() != dim) {
    throw DimensionError("covariance must be (K*N) x (K*N)");
  }
  if (!matrix_.allFinite()) {
    throw DomainError("covariance has non-finite entries");
  }
  matrix_ = ((matrix_ + matrix_.transpose()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(matrix_, Eigen::EigenvaluesOnly);
  sigma_min_ = es.eigenvalues().minCoeff();

  // Spectral norm of the KN x N strip equals sqrt(lambda_max of its Gram).
  for (int k = 0; k < K_; ++k) {
    const MatrixXd gram = block_column(k).transpose() * block_column(k);
    es.compute(gram, Eigen::EigenvaluesOnly);
    const double top = std::max(0.0, es.eigenvalues().maxCoeff());
    max_block_column_norm_ = std::max(max_block_column_norm_, std::sqrt(top));
  }
}

void EmpiricalCovariance::check_block_index(int k) const {
  if (k < 0 || k >= K_) {
    throw DimensionError("block index " + std::to_string(k) +
                         " out of range [0, " + std::to_string(K_) + ")");
  }
}

DatasetStack stack(const MatrixStack& datasets) {
  if (datasets.empty()) {
    throw DimensionError("stack: empty dataset list");
  }
  const Eigen::Index n = datasets[0].rows();
  const Eigen::Index v = datasets[0].cols();
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    if (datasets[k].rows() != n || datasets[k].cols() != v) {
      throw DimensionError("stack: dataset " + std::to_string(k) +
                           " has mismatched shape");
    }
  }
  Dims dims(static_cast<int>(datasets.size()), static_cast<int>(n),
            static_cast<int>(v));
  MatrixXd stacked(dims.K * dims.N, dims.V);
  for (int k = 0; k < dims.K; ++k) {
    stacked.middleRows(k * dims.N, dims.N) = datasets[k];
  }
  return DatasetStack(dims, std::move(stacked));
}

DatasetStack center(const DatasetStack& data) {
  MatrixXd x = data.stacked();
  x.colwise() -= x.rowwise().mean();
  return DatasetStack(data.dims(), std::move(x));
}

EmpiricalCovariance empirical_covariance(const DatasetStack& data) {
  const MatrixXd& x = data.stacked();
  MatrixXd cov = (x * x.transpose()) / static_cast<double>(data.dims().V);
  return EmpiricalCovariance(std::move(cov), data.dims().K, data.dims().N);
}

std::pair<DatasetStack, WhiteningInfo> whiten(const DatasetStack& data) {
  const Dims& dims = data.dims();
  WhiteningInfo info;
  info.matrices.resize(dims.K);
  info.inverses.resize(dims.K);
  MatrixXd whitened(dims.K * dims.N, dims.V);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es;
  for (int k = 0; k < dims.K; ++k) {
    const auto xk = data.dataset(k);
    const MatrixXd cov = (xk * xk.transpose()) / static_cast<double>(dims.V);
    es.compute(cov);
    const VectorXd& lambda = es.eigenvalues();
    if (lambda.minCoeff() <= 1e-12) {
      throw SingularMatrixError("whiten: covariance of dataset " +
                                std::to_string(k) + " is not positive definite");
    }
    const MatrixXd& q = es.eigenvectors();
    MatrixXd b = q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
    MatrixXd binv = q * lambda.cwiseSqrt().asDiagonal() * q.transpose();
    b = ((b + b.transpose()) / 2.0).eval();
    binv = ((binv + binv.transpose()) / 2.0).eval();
    whitened.middleRows(k * dims.N, dims.N) = b * xk;
    info.matrices[k] = std::move(b);
    info.inverses[k] = std::move(binv);
  }
  return {DatasetStack(dims, std::move(whitened)), std::move(info)};
}

MatrixXd scv_gram(const DemixingTensor& demixing, const EmpiricalCovariance& cov,
                  int n) {
  const int K = cov.num_datasets();
  const int N = cov.num_sources();
  if (demixing.num_datasets() != K || demixing.num_sources() != N) {
    throw DimensionError("scv_gram: demixing tensor does not match covariance");
  }
  if (n < 0 || n >= N) {
    throw DimensionError("scv_gram: source index out of range");
  }
  MatrixXd g(K, K);
  for (int k = 0; k < K; ++k) {
    const auto wk = demixing.slice(k).row(n);
    for (int l = k; l < K; ++l) {
      const auto wl = demixing.slice(l).row(n);
      g(k, l) = wk * cov.block(k, l) * wl.transpose();
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < k; ++l) g(k, l) = g(l, k);
  }
  return ((g + g.transpose()) / 2.0).eval();
}

double log_abs_det(const MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("log_abs_det: matrix must be square");
  }
  Eigen::PartialPivLU<MatrixXd> lu(m);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double d = std::abs(lu.matrixLU()(i, i));
    if (d == 0.0) return -kInf;
    sum += std::log(d);
  }
  return sum;
}

}  // namespace iva
