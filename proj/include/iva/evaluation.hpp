#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iva/tensor_model.hpp"

namespace iva {

// Joint inter-symbol interference of the global transfer tensor G = W A.
// Aggregates |G| across datasets, then measures how far the aggregate is from
// a scaled permutation: 0 = perfect joint separation, 1 = worst case.
// Needs at least two sources; degenerate transfers (an all-zero row or
// column in the aggregate) are rejected.
double jisi(const DemixingTensor& demixing, const MatrixStack& mixing);

// Score of a demixing tensor estimated on whitened data against the original
// mixing: composes each slice with its dataset's whitening transform first.
double score_in_original_space(const DemixingTensor& whitened_demixing,
                               const WhiteningInfo& whitening,
                               const MatrixStack& mixing);

// One solver run on one synthetic instance.
struct TrialResult {
  std::string case_label;
  int K = 0;
  int N = 0;
  int V = 0;
  std::string algo;
  std::uint64_t seed = 0;
  double jisi = 0.0;
  double time_s = 0.0;
  int iterations = 0;
  double final_cost = 0.0;
  bool converged = false;
  std::string status = "ok";  // "ok" or a short failure tag
};

// Per-configuration aggregate over successful trials.
struct SummaryRow {
  std::string case_label;
  int K = 0;
  int N = 0;
  int V = 0;
  std::string algo;
  int n_trials = 0;
  double mean_jisi = 0.0;
  double std_jisi = 0.0;
  double mean_time = 0.0;
  double std_time = 0.0;
};

// Groups trials by (case, K, N, V, algo) and aggregates the successful ones;
// sample standard deviation (n-1), zero for singleton groups. Groups whose
// trials all failed are dropped. Rows come back sorted by the group key.
std::vector<SummaryRow> summarize(const std::vector<TrialResult>& trials);

}  // namespace iva
