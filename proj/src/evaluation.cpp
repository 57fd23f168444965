#include "iva/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

namespace iva {

double jisi(const DemixingTensor& demixing, const MatrixStack& mixing) {
  const int K = demixing.num_datasets();
  const int N = demixing.num_sources();
  if (static_cast<int>(mixing.size()) != K) {
    throw DimensionError("jisi: need one mixing matrix per dataset");
  }
  if (N < 2) {
    throw DomainError("jisi: undefined for a single source");
  }
  MatrixXd aggregate = MatrixXd::Zero(N, N);
  for (int k = 0; k < K; ++k) {
    if (mixing[k].rows() != N || mixing[k].cols() != N) {
      throw DimensionError("jisi: mixing slice " + std::to_string(k) +
                           " must be N x N");
    }
    aggregate += (demixing.slice(k) * mixing[k]).cwiseAbs();
  }

  double acc = 0.0;
  for (int n = 0; n < N; ++n) {
    const double m = aggregate.row(n).maxCoeff();
    if (!(m > 0.0)) {
      throw DomainError("jisi: row " + std::to_string(n) +
                        " of the aggregate transfer is zero");
    }
    acc += aggregate.row(n).sum() / m - 1.0;
  }
  for (int m = 0; m < N; ++m) {
    const double c = aggregate.col(m).maxCoeff();
    if (!(c > 0.0)) {
      throw DomainError("jisi: column " + std::to_string(m) +
                        " of the aggregate transfer is zero");
    }
    acc += aggregate.col(m).sum() / c - 1.0;
  }
  return acc / (2.0 * N * (N - 1.0));
}

double score_in_original_space(const DemixingTensor& whitened_demixing,
                               const WhiteningInfo& whitening,
                               const MatrixStack& mixing) {
  const int K = whitened_demixing.num_datasets();
  if (static_cast<int>(whitening.matrices.size()) != K) {
    throw DimensionError(
        "score_in_original_space: whitening does not match demixing");
  }
  MatrixStack composed(K);
  for (int k = 0; k < K; ++k) {
    composed[k] = whitened_demixing.slice(k) * whitening.matrices[k];
  }
  return jisi(DemixingTensor(std::move(composed)), mixing);
}

std::vector<SummaryRow> summarize(const std::vector<TrialResult>& trials) {
  using Key = std::tuple<std::string, int, int, int, std::string>;
  std::map<Key, std::vector<const TrialResult*>> groups;
  for (const TrialResult& t : trials) {
    groups[Key(t.case_label, t.K, t.N, t.V, t.algo)].push_back(&t);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    SummaryRow row;
    row.case_label = std::get<0>(key);
    row.K = std::get<1>(key);
    row.N = std::get<2>(key);
    row.V = std::get<3>(key);
    row.algo = std::get<4>(key);
    double jisi_sum = 0.0, time_sum = 0.0;
    for (const TrialResult* t : members) {
      if (t->status != "ok") continue;
      ++row.n_trials;
      jisi_sum += t->jisi;
      time_sum += t->time_s;
    }
    if (row.n_trials == 0) continue;
    row.mean_jisi = jisi_sum / row.n_trials;
    row.mean_time = time_sum / row.n_trials;
    if (row.n_trials > 1) {
      double jisi_sq = 0.0, time_sq = 0.0;
      for (const TrialResult* t : members) {
        if (t->status != "ok") continue;
        jisi_sq += (t->jisi - row.mean_jisi) * (t->jisi - row.mean_jisi);
        time_sq += (t->time_s - row.mean_time) * (t->time_s - row.mean_time);
      }
      row.std_jisi = std::sqrt(jisi_sq / (row.n_trials - 1));
      row.std_time = std::sqrt(time_sq / (row.n_trials - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace iva
