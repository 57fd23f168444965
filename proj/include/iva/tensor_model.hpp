#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "iva/errors.hpp"

namespace iva {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A tensor stored as a list of equally sized matrix slices.
using MatrixStack = std::vector<MatrixXd>;

// Problem dimensions: K datasets, N sources per dataset, V samples.
struct Dims {
  int K = 0;
  int N = 0;
  int V = 0;

  Dims() = default;
  Dims(int K_, int N_, int V_);

  // Sample covariances of stacked data are almost surely nonsingular only
  // when there are more samples than stacked channels. Solvers require this;
  // plain data containers do not.
  bool oversampled() const { return V > K * N; }
};

// K datasets of shape N x V kept contiguously as a (K*N) x V matrix; dataset
// k occupies rows [k*N, (k+1)*N).
class DatasetStack {
 public:
  DatasetStack(Dims dims, MatrixXd stacked);

  const Dims& dims() const { return dims_; }
  const MatrixXd& stacked() const { return stacked_; }
  Eigen::Block<const MatrixXd> dataset(int k) const {
    check_dataset_index(k);
    return stacked_.middleRows(k * dims_.N, dims_.N);
  }

 private:
  void check_dataset_index(int k) const;

  Dims dims_;
  MatrixXd stacked_;
};

// One N x N demixing matrix per dataset.
class DemixingTensor {
 public:
  explicit DemixingTensor(MatrixStack slices);
  static DemixingTensor identity(int num_datasets, int num_sources);

  int num_datasets() const { return static_cast<int>(slices_.size()); }
  int num_sources() const { return static_cast<int>(slices_[0].rows()); }
  const MatrixXd& slice(int k) const { return slices_.at(k); }
  const MatrixStack& slices() const { return slices_; }

  // True when every slice has |det| above the floor.
  bool nonsingular(double min_abs_det = 1e-12) const;

 private:
  MatrixStack slices_;
};

// One K x K symmetric matrix per source, modelling the precision of the
// source's cross-dataset component vector.
class PrecisionTensor {
 public:
  explicit PrecisionTensor(MatrixStack slices);
  static PrecisionTensor identity(int num_sources, int num_datasets);

  int num_sources() const { return static_cast<int>(slices_.size()); }
  int num_datasets() const { return static_cast<int>(slices_[0].rows()); }
  const MatrixXd& slice(int n) const { return slices_.at(n); }
  const MatrixStack& slices() const { return slices_; }

  // True when the smallest eigenvalue of every slice is >= floor - tol.
  bool feasible(double floor, double tol = 0.0) const;

 private:
  MatrixStack slices_;
};

// Sample covariance of the stacked data, with the spectral quantities the
// solvers need cached at construction.
class EmpiricalCovariance {
 public:
  EmpiricalCovariance(MatrixXd matrix, int num_datasets, int num_sources);

  int num_datasets() const { return K_; }
  int num_sources() const { return N_; }
  const MatrixXd& matrix() const { return matrix_; }

  // Smallest eigenvalue of the (symmetrized) covariance.
  double sigma_min() const { return sigma_min_; }
  // max_k of the spectral norm of the k-th block column (the KN x N strip of
  // cross-covariances against dataset k).
  double max_block_column_norm() const { return max_block_column_norm_; }

  Eigen::Block<const MatrixXd> block(int k, int l) const {
    check_block_index(k);
    check_block_index(l);
    return matrix_.block(k * N_, l * N_, N_, N_);
  }
  Eigen::Block<const MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true>
  block_column(int k) const {
    check_block_index(k);
    return matrix_.middleCols(k * N_, N_);
  }

 private:
  void check_block_index(int k) const;

  int K_ = 0;
  int N_ = 0;
  MatrixXd matrix_;
  double sigma_min_ = 0.0;
  double max_block_column_norm_ = 0.0;
};

// Per-dataset whitening transforms and their inverses.
struct WhiteningInfo {
  MatrixStack matrices;  // B_k, N x N symmetric
  MatrixStack inverses;  // B_k^{-1}
};

// Concatenates K datasets of equal shape into one stack.
DatasetStack stack(const MatrixStack& datasets);

// Subtracts the per-row sample mean.
DatasetStack center(const DatasetStack& data);

// (1/V) X X^T of the stacked data.
EmpiricalCovariance empirical_covariance(const DatasetStack& data);

// Applies the symmetric inverse square root of each dataset's own sample
// covariance, making every dataset's covariance the identity.
std::pair<DatasetStack, WhiteningInfo> whiten(const DatasetStack& data);

// Covariance of source n's cross-dataset vector under the current demixing:
// the K x K Gram matrix with entries w_n^(k)T R_(k,l) w_n^(l).
MatrixXd scv_gram(const DemixingTensor& demixing, const EmpiricalCovariance& cov,
                  int n);

// log |det M| from an LU factorization; -inf when M is singular. Safe against
// overflow for determinants far outside double range.
double log_abs_det(const MatrixXd& m);

}  // namespace iva
