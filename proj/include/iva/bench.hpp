#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "iva/baseline_ivagv.hpp"
#include "iva/evaluation.hpp"
#include "iva/synthgen.hpp"

namespace iva {

enum class Algo { Palm, Ivagv };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& s);

// Grid of benchmark configurations: every case crossed with every (K, N)
// pair and every algorithm, n_trials instances each.
struct ExperimentConfig {
  std::vector<CaseLabel> cases;
  std::vector<int> K_list;
  std::vector<int> N_list;
  int V = 10000;
  int n_trials = 20;
  std::uint64_t base_seed = 1;
  std::vector<Algo> algos;
  PalmConfig palm;
  IvagvConfig ivagv;
  std::filesystem::path output_dir;  // empty: keep results in memory only
  int parallelism = 0;               // 0: one worker per hardware thread

  void validate() const;
};

// Instance seed for one grid cell. Pure function of its arguments and
// independent of the algorithm, so every solver sees the same data.
std::uint64_t trial_seed(std::uint64_t base_seed, CaseLabel c, int K, int N,
                         int trial);

struct TrialSpec {
  CaseLabel case_label = CaseLabel::A;
  int K = 0;
  int N = 0;
  int V = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  Algo algo = Algo::Palm;
};

// One end-to-end trial: draw the instance, center and whiten, solve on the
// whitened data, score against the true mixing in original coordinates.
// Solver breakdowns (NumericalError, SingularMatrixError) are recorded in
// the result's status; anything else propagates.
TrialResult run_trial(const TrialSpec& spec, const PalmConfig& palm_cfg,
                      const IvagvConfig& ivagv_cfg);

struct BenchmarkOutput {
  std::vector<TrialResult> results;  // grid order: case, K, N, algo, trial
  std::vector<SummaryRow> summary;
  std::filesystem::path raw_csv;     // set when output_dir is non-empty
  std::filesystem::path summary_csv;
  std::filesystem::path scatter_csv;
};

BenchmarkOutput run_benchmark(const ExperimentConfig& config);

// CSV schema: case,K,N,V,algo,seed,jisi,time_s,iterations,final_cost,
// converged,status. Doubles are written with 17 significant digits.
void write_raw_csv(const std::filesystem::path& path,
                   const std::vector<TrialResult>& results);
std::vector<TrialResult> read_raw_csv(const std::filesystem::path& path);

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& summary);

// Mean and spread of time against score per grid cell, one row per cell,
// for crosshair-style accuracy/cost plots.
void write_scatter_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& summary);

}  // namespace iva
