// Command line front end: synthetic dataset generation, single solves,
// benchmark grids, and scoring of saved demixing results.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "iva/bench.hpp"
#include "iva/dataset_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iva;

namespace {

InitMode parse_init(const std::string& s) {
  if (s == "identity") return InitMode::Identity;
  if (s == "random") return InitMode::RandomOrthogonal;
  throw ConfigError("init mode '" + s + "' (expected identity or random)");
}

void write_trace_json(const fs::path& path, const std::string& algo,
                      const SolveTrace& trace) {
  json records = json::array();
  int i = 0;
  for (const IterationRecord& r : trace.iterations) {
    records.push_back({{"iteration", i++},
                       {"cost", r.cost},
                       {"change_demixing", r.change_demixing},
                       {"change_precision", r.change_precision},
                       {"lipschitz_demixing", r.lipschitz_demixing},
                       {"precision_norm", r.precision_norm},
                       {"inner_demixing_steps", r.inner_demixing_steps},
                       {"inner_precision_steps", r.inner_precision_steps},
                       {"step_size", r.step_size},
                       {"grad_sq_norm", r.grad_sq_norm}});
  }
  json doc = {{"algo", algo},
              {"converged", trace.converged},
              {"iterations_used", trace.iterations_used},
              {"wall_seconds", trace.wall_seconds},
              {"records", std::move(records)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

struct GenerateOpts {
  std::vector<std::string> cases{"A"};
  std::vector<int> K_list{5};
  std::vector<int> N_list{10};
  int V = 10000;
  int trials = 1;
  std::uint64_t seed = 1;
  std::string out_dir;
};

void run_generate(const GenerateOpts& o) {
  if (o.trials < 1) throw ConfigError("generate: --trials must be positive");
  for (const std::string& cs : o.cases) {
    const CaseLabel c = case_from_string(cs);
    for (int K : o.K_list) {
      for (int N : o.N_list) {
        if (N < 2) throw ConfigError("generate: N must be at least 2");
        if (o.V <= K * N) throw ConfigError("generate: V must exceed K * N");
        for (int t = 0; t < o.trials; ++t) {
          const std::uint64_t instance_seed = trial_seed(o.seed, c, K, N, t);
          const Dims dims(K, N, o.V);
          const GroundTruth truth = make_ground_truth(c, dims, instance_seed);
          const MatrixStack sources =
              sample_sources(truth.scv_covariances, dims, instance_seed);
          const DatasetStack observed = mix(truth.mixing, sources);
          char name[96];
          std::snprintf(name, sizeof(name), "case%s_K%d_N%d_V%d_t%03d",
                        to_string(c).c_str(), K, N, o.V, t);
          const fs::path prefix = fs::path(o.out_dir) / name;
          write_dataset(prefix, observed);
          write_ground_truth(prefix.string() + "_gt", truth);
          std::printf("%s seed=%llu\n", prefix.c_str(),
                      static_cast<unsigned long long>(instance_seed));
        }
      }
    }
  }
}

struct SolveOpts {
  std::string data;
  std::string truth;
  std::string algo = "palm";
  std::string out_csv;
  std::string trace_path;
  std::string save_prefix;
};

void run_solve(const SolveOpts& o, PalmConfig palm_cfg, IvagvConfig ivagv_cfg) {
  const Algo algo = algo_from_string(o.algo);
  const DatasetStack data = read_dataset(o.data);
  const GroundTruth truth = read_ground_truth(o.truth);
  const Dims& dims = data.dims();
  if (static_cast<int>(truth.mixing.size()) != dims.K ||
      truth.mixing.empty() || truth.mixing[0].rows() != dims.N) {
    throw DimensionError("solve: ground truth shape does not match dataset");
  }

  const auto [white, whitening] = whiten(center(data));
  const EmpiricalCovariance cov = empirical_covariance(white);

  TrialResult row;
  row.case_label = truth.case_label;
  row.K = dims.K;
  row.N = dims.N;
  row.V = dims.V;
  row.algo = to_string(algo);
  row.seed = algo == Algo::Palm ? palm_cfg.seed : ivagv_cfg.seed;

  SolveTrace trace;
  DemixingTensor west = DemixingTensor::identity(dims.K, dims.N);
  try {
    if (algo == Algo::Palm) {
      PalmResult res = palm_solve(cov, palm_cfg);
      west = std::move(res.demixing);
      trace = std::move(res.trace);
    } else {
      IvagvResult res = ivagv_solve(cov, ivagv_cfg);
      west = std::move(res.demixing);
      trace = std::move(res.trace);
    }
  } catch (const NumericalError& e) {
    // Keep the partial trace around for post-mortems.
    if (!o.trace_path.empty()) {
      write_trace_json(o.trace_path, to_string(algo), e.trace());
    }
    throw;
  }

  row.jisi = score_in_original_space(west, whitening, truth.mixing);
  row.time_s = trace.wall_seconds;
  row.iterations = trace.iterations_used;
  row.final_cost = trace.iterations.back().cost;
  row.converged = trace.converged;

  if (!o.out_csv.empty()) write_raw_csv(o.out_csv, {row});
  if (!o.trace_path.empty()) write_trace_json(o.trace_path, row.algo, trace);
  if (!o.save_prefix.empty()) {
    // Compose with the whitening so the saved demixing applies to the raw
    // (centered) data and can be scored directly against the true mixing.
    MatrixStack composed(dims.K);
    for (int k = 0; k < dims.K; ++k) {
      composed[k] = west.slice(k) * whitening.matrices[k];
    }
    write_demixing(o.save_prefix, DemixingTensor(std::move(composed)));
  }

  std::printf("algo=%s jisi=%.17g iterations=%d converged=%d time_s=%.6f\n",
              row.algo.c_str(), row.jisi, row.iterations,
              row.converged ? 1 : 0, row.time_s);
}

void apply_palm_json(const json& j, PalmConfig& cfg) {
  if (!j.is_object()) throw ConfigError("config: \"palm\" must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "gamma_demixing") value.get_to(cfg.gamma_demixing);
      else if (key == "gamma_precision") value.get_to(cfg.gamma_precision);
      else if (key == "alpha") value.get_to(cfg.alpha);
      else if (key == "epsilon") value.get_to(cfg.epsilon);
      else if (key == "delta") value.get_to(cfg.delta);
      else if (key == "max_outer") value.get_to(cfg.max_outer);
      else if (key == "max_inner_demixing") value.get_to(cfg.max_inner_demixing);
      else if (key == "max_inner_precision") value.get_to(cfg.max_inner_precision);
      else if (key == "seed") value.get_to(cfg.seed);
      else if (key == "init") cfg.init = parse_init(value.get<std::string>());
      else throw ConfigError("config: unknown palm key \"" + key + "\"");
    } catch (const json::exception& e) {
      throw ConfigError("config: bad palm." + key + ": " + e.what());
    }
  }
}

void apply_ivagv_json(const json& j, IvagvConfig& cfg) {
  if (!j.is_object()) throw ConfigError("config: \"ivagv\" must be an object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "delta") value.get_to(cfg.delta);
      else if (key == "max_iter") value.get_to(cfg.max_iter);
      else if (key == "armijo_c1") value.get_to(cfg.armijo_c1);
      else if (key == "backtrack_factor") value.get_to(cfg.backtrack_factor);
      else if (key == "initial_step") value.get_to(cfg.initial_step);
      else if (key == "max_halvings") value.get_to(cfg.max_halvings);
      else if (key == "seed") value.get_to(cfg.seed);
      else if (key == "init") cfg.init = parse_init(value.get<std::string>());
      else throw ConfigError("config: unknown ivagv key \"" + key + "\"");
    } catch (const json::exception& e) {
      throw ConfigError("config: bad ivagv." + key + ": " + e.what());
    }
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config " + path + ": expected a JSON object");
  }
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "cases") {
        cfg.cases.clear();
        for (const auto& v : value) {
          cfg.cases.push_back(case_from_string(v.get<std::string>()));
        }
      } else if (key == "K_list") {
        value.get_to(cfg.K_list);
      } else if (key == "N_list") {
        value.get_to(cfg.N_list);
      } else if (key == "V") {
        value.get_to(cfg.V);
      } else if (key == "n_trials") {
        value.get_to(cfg.n_trials);
      } else if (key == "base_seed") {
        value.get_to(cfg.base_seed);
      } else if (key == "algos") {
        cfg.algos.clear();
        for (const auto& v : value) {
          cfg.algos.push_back(algo_from_string(v.get<std::string>()));
        }
      } else if (key == "output_dir") {
        cfg.output_dir = value.get<std::string>();
      } else if (key == "parallelism") {
        value.get_to(cfg.parallelism);
      } else if (key == "palm") {
        apply_palm_json(value, cfg.palm);
      } else if (key == "ivagv") {
        apply_ivagv_json(value, cfg.ivagv);
      } else {
        throw ConfigError("config: unknown key \"" + key + "\"");
      }
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for \"" + key + "\": " + e.what());
    }
  }
  return cfg;
}

void apply_threads_env(ExperimentConfig& cfg) {
  const char* env = std::getenv("IVA_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0 || v > 4096) {
    throw ConfigError("IVA_THREADS must be a small nonnegative integer, got '" +
                      std::string(env) + "'");
  }
  cfg.parallelism = static_cast<int>(v);
}

void run_benchmark_cmd(ExperimentConfig cfg) {
  apply_threads_env(cfg);
  const BenchmarkOutput out = run_benchmark(cfg);

  std::printf("%-4s %4s %4s %7s %-6s %7s %13s %13s %13s\n", "case", "K", "N",
              "V", "algo", "trials", "mean_jisi", "std_jisi", "mean_time_s");
  for (const SummaryRow& s : out.summary) {
    std::printf("%-4s %4d %4d %7d %-6s %7d %13.4e %13.4e %13.4e\n",
                s.case_label.c_str(), s.K, s.N, s.V, s.algo.c_str(), s.n_trials,
                s.mean_jisi, s.std_jisi, s.mean_time);
  }

  int failed = 0;
  for (const TrialResult& r : out.results) {
    if (r.status != "ok") ++failed;
  }
  if (failed > 0) {
    std::fprintf(stderr, "%d of %zu trials failed; see the status column\n",
                 failed, out.results.size());
  }
  if (!out.raw_csv.empty()) {
    std::printf("wrote %s %s %s\n", out.raw_csv.c_str(),
                out.summary_csv.c_str(), out.scatter_csv.c_str());
  }
}

struct JisiOpts {
  std::string demixing;
  std::string truth;
};

void run_jisi(const JisiOpts& o) {
  const DemixingTensor west = read_demixing(o.demixing);
  const GroundTruth truth = read_ground_truth(o.truth);
  std::printf("%.17g\n", jisi(west, truth.mixing));
}

struct SolverFlags {
  std::string init = "identity";
};

// Solver knobs shared by the solve and benchmark subcommands.
void add_solver_options(CLI::App* cmd, PalmConfig& palm, IvagvConfig& ivagv,
                        SolverFlags& flags) {
  cmd->add_option("--gamma-w", palm.gamma_demixing,
                  "Demixing step safety factor, in (0, 1)")
      ->capture_default_str();
  cmd->add_option("--gamma-c", palm.gamma_precision,
                  "Precision step safety factor, in (0, 2)")
      ->capture_default_str();
  cmd->add_option("--alpha", palm.alpha, "Diagonal regularization weight")
      ->capture_default_str();
  cmd->add_option("--epsilon", palm.epsilon, "Precision eigenvalue floor")
      ->capture_default_str();
  cmd->add_option("--palm-delta", palm.delta,
                  "Proximal solver convergence threshold")
      ->capture_default_str();
  cmd->add_option("--palm-max-outer", palm.max_outer,
                  "Proximal solver iteration cap")
      ->capture_default_str();
  cmd->add_option("--ivagv-delta", ivagv.delta,
                  "Gradient solver convergence threshold")
      ->capture_default_str();
  cmd->add_option("--ivagv-max-iter", ivagv.max_iter,
                  "Gradient solver iteration cap")
      ->capture_default_str();
  cmd->add_option("--init", flags.init,
                  "Demixing initialization: identity or random")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint blind source separation over multiple datasets: "
               "synthetic benchmarks, solvers, and scoring"};
  app.require_subcommand(1);

  GenerateOpts gen_opts;
  CLI::App* gen = app.add_subcommand(
      "generate", "Draw synthetic instances and write dataset + ground-truth "
                  "file pairs");
  gen->add_option("--case", gen_opts.cases, "Difficulty cases (A, B, C, D)")
      ->delimiter(',')
      ->capture_default_str();
  gen->add_option("--K", gen_opts.K_list, "Dataset counts")
      ->delimiter(',')
      ->capture_default_str();
  gen->add_option("--N", gen_opts.N_list, "Sources per dataset")
      ->delimiter(',')
      ->capture_default_str();
  gen->add_option("--V", gen_opts.V, "Samples per dataset")
      ->capture_default_str();
  gen->add_option("--trials", gen_opts.trials, "Instances per configuration")
      ->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Base seed for instance derivation")
      ->capture_default_str();
  gen->add_option("--out", gen_opts.out_dir, "Output directory")->required();

  SolveOpts solve_opts;
  PalmConfig solve_palm;
  IvagvConfig solve_ivagv;
  SolverFlags solve_flags;
  std::uint64_t solve_seed = 0;
  CLI::App* solve = app.add_subcommand(
      "solve", "Run one solver on a dataset file and score it against the "
               "ground truth");
  solve->add_option("--data", solve_opts.data, "Dataset file prefix")
      ->required();
  solve->add_option("--truth", solve_opts.truth, "Ground-truth file prefix")
      ->required();
  solve->add_option("--algo", solve_opts.algo, "Solver: palm or ivagv")
      ->capture_default_str();
  solve->add_option("--out", solve_opts.out_csv, "Write the result row as CSV");
  solve->add_option("--trace", solve_opts.trace_path,
                    "Write the per-iteration trace as JSON");
  solve->add_option("--save-demixing", solve_opts.save_prefix,
                    "Save the estimated demixing (original coordinates) under "
                    "this prefix");
  solve->add_option("--solver-seed", solve_seed,
                    "Seed for random initialization")
      ->capture_default_str();
  add_solver_options(solve, solve_palm, solve_ivagv, solve_flags);

  ExperimentConfig bench_flags_cfg;
  bench_flags_cfg.cases = {CaseLabel::A, CaseLabel::B, CaseLabel::C,
                           CaseLabel::D};
  bench_flags_cfg.K_list = {5};
  bench_flags_cfg.N_list = {10};
  bench_flags_cfg.algos = {Algo::Palm, Algo::Ivagv};
  std::vector<std::string> bench_cases{"A", "B", "C", "D"};
  std::vector<std::string> bench_algos{"palm", "ivagv"};
  std::string bench_out_dir;
  std::string bench_config_path;
  SolverFlags bench_solver_flags;
  CLI::App* bench = app.add_subcommand(
      "benchmark", "Run the full (case x K x N x algo x trial) grid and "
                   "write raw, summary, and scatter CSVs");
  std::vector<CLI::Option*> grid_opts;
  grid_opts.push_back(bench->add_option("--case", bench_cases,
                                        "Difficulty cases (A, B, C, D)")
                          ->delimiter(',')
                          ->capture_default_str());
  grid_opts.push_back(bench->add_option("--K", bench_flags_cfg.K_list,
                                        "Dataset counts")
                          ->delimiter(',')
                          ->capture_default_str());
  grid_opts.push_back(bench->add_option("--N", bench_flags_cfg.N_list,
                                        "Sources per dataset")
                          ->delimiter(',')
                          ->capture_default_str());
  grid_opts.push_back(bench->add_option("--V", bench_flags_cfg.V,
                                        "Samples per dataset")
                          ->capture_default_str());
  grid_opts.push_back(bench->add_option("--trials", bench_flags_cfg.n_trials,
                                        "Trials per configuration")
                          ->capture_default_str());
  grid_opts.push_back(bench->add_option("--seed", bench_flags_cfg.base_seed,
                                        "Base seed for per-trial derivation")
                          ->capture_default_str());
  grid_opts.push_back(bench->add_option("--algo", bench_algos,
                                        "Solvers to run: palm, ivagv")
                          ->delimiter(',')
                          ->capture_default_str());
  grid_opts.push_back(
      bench->add_option("--out", bench_out_dir, "Output directory for CSVs"));
  grid_opts.push_back(bench->add_option(
      "--threads", bench_flags_cfg.parallelism,
      "Worker threads; 0 means one per hardware thread. The IVA_THREADS "
      "environment variable overrides this."));
  bench->add_option("--config", bench_config_path,
                    "Read the whole experiment from a JSON file instead of "
                    "grid flags");
  add_solver_options(bench, bench_flags_cfg.palm, bench_flags_cfg.ivagv,
                     bench_solver_flags);

  JisiOpts jisi_opts;
  CLI::App* jisi_cmd = app.add_subcommand(
      "jisi", "Score a saved demixing file against a ground-truth file");
  jisi_cmd->add_option("--demixing", jisi_opts.demixing,
                       "Demixing file prefix (original coordinates)")
      ->required();
  jisi_cmd->add_option("--truth", jisi_opts.truth, "Ground-truth file prefix")
      ->required();

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      run_generate(gen_opts);
    } else if (solve->parsed()) {
      const InitMode init = parse_init(solve_flags.init);
      solve_palm.init = init;
      solve_palm.seed = solve_seed;
      solve_ivagv.init = init;
      solve_ivagv.seed = solve_seed;
      run_solve(solve_opts, solve_palm, solve_ivagv);
    } else if (bench->parsed()) {
      ExperimentConfig cfg;
      if (!bench_config_path.empty()) {
        for (const CLI::Option* opt : grid_opts) {
          if (opt->count() > 0) {
            throw ConfigError("--config cannot be combined with grid flags");
          }
        }
        cfg = parse_config_file(bench_config_path);
      } else {
        cfg = bench_flags_cfg;
        cfg.cases.clear();
        for (const std::string& c : bench_cases) {
          cfg.cases.push_back(case_from_string(c));
        }
        cfg.algos.clear();
        for (const std::string& a : bench_algos) {
          cfg.algos.push_back(algo_from_string(a));
        }
        cfg.output_dir = bench_out_dir;
        const InitMode init = parse_init(bench_solver_flags.init);
        cfg.palm.init = init;
        cfg.ivagv.init = init;
      }
      run_benchmark_cmd(std::move(cfg));
    } else if (jisi_cmd->parsed()) {
      run_jisi(jisi_opts);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
