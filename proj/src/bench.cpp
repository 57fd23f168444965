#include "iva/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_set>

#include "iva/rng.hpp"

namespace iva {

namespace {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Status strings end up as one CSV field; keep them single-line and
// comma-free.
std::string sanitize_status(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

constexpr char kRawHeader[] =
    "case,K,N,V,algo,seed,jisi,time_s,iterations,final_cost,converged,status";

}  // namespace

std::string to_string(Algo a) {
  switch (a) {
    case Algo::Palm: return "palm";
    case Algo::Ivagv: return "ivagv";
  }
  throw ConfigError("unknown algorithm");
}

Algo algo_from_string(const std::string& s) {
  if (s == "palm") return Algo::Palm;
  if (s == "ivagv") return Algo::Ivagv;
  throw ConfigError("unknown algorithm '" + s + "' (expected palm or ivagv)");
}

void ExperimentConfig::validate() const {
  if (cases.empty()) throw ConfigError("benchmark: no cases selected");
  if (K_list.empty() || N_list.empty()) {
    throw ConfigError("benchmark: K and N lists must be non-empty");
  }
  if (algos.empty()) throw ConfigError("benchmark: no algorithms selected");
  int max_k = 0, max_n = 0;
  for (int k : K_list) {
    if (k < 1) throw ConfigError("benchmark: K entries must be positive");
    max_k = std::max(max_k, k);
  }
  for (int n : N_list) {
    // The score is undefined for one source, so the grid needs N >= 2.
    if (n < 2) throw ConfigError("benchmark: N entries must be at least 2");
    max_n = std::max(max_n, n);
  }
  if (V <= max_k * max_n) {
    throw ConfigError("benchmark: V must exceed max(K) * max(N) so sample "
                      "covariances are nonsingular");
  }
  if (n_trials < 1) throw ConfigError("benchmark: n_trials must be positive");
  if (parallelism < 0) throw ConfigError("benchmark: parallelism must be >= 0");
  palm.validate();
  ivagv.validate();
}

std::uint64_t trial_seed(std::uint64_t base_seed, CaseLabel c, int K, int N,
                         int trial) {
  if (K < 0 || N < 0 || trial < 0 || K >= (1 << 21) || N >= (1 << 21) ||
      trial >= (1 << 21)) {
    throw ConfigError("trial_seed: grid coordinates out of range");
  }
  // Injective packing, so every grid cell owns a distinct substream.
  const std::uint64_t packed = (static_cast<std::uint64_t>(K) << 42) |
                               (static_cast<std::uint64_t>(N) << 21) |
                               static_cast<std::uint64_t>(trial);
  return derive_stream_seed(base_seed, "trial-" + to_string(c), packed);
}

TrialResult run_trial(const TrialSpec& spec, const PalmConfig& palm_cfg,
                      const IvagvConfig& ivagv_cfg) {
  const Dims dims(spec.K, spec.N, spec.V);
  TrialResult r;
  r.case_label = to_string(spec.case_label);
  r.K = spec.K;
  r.N = spec.N;
  r.V = spec.V;
  r.algo = to_string(spec.algo);
  r.seed = spec.seed;

  const GroundTruth truth = make_ground_truth(spec.case_label, dims, spec.seed);
  const MatrixStack sources =
      sample_sources(truth.scv_covariances, dims, spec.seed);
  const DatasetStack observed = mix(truth.mixing, sources);
  const auto [whitened, whitening] = whiten(center(observed));
  const EmpiricalCovariance cov = empirical_covariance(whitened);

  try {
    SolveTrace trace;
    double score = 0.0;
    if (spec.algo == Algo::Palm) {
      PalmConfig cfg = palm_cfg;
      cfg.seed = spec.seed;
      PalmResult res = palm_solve(cov, cfg);
      score = score_in_original_space(res.demixing, whitening, truth.mixing);
      trace = std::move(res.trace);
    } else {
      IvagvConfig cfg = ivagv_cfg;
      cfg.seed = spec.seed;
      IvagvResult res = ivagv_solve(cov, cfg);
      score = score_in_original_space(res.demixing, whitening, truth.mixing);
      trace = std::move(res.trace);
    }
    r.jisi = score;
    r.time_s = trace.wall_seconds;
    r.iterations = trace.iterations_used;
    r.final_cost = trace.iterations.back().cost;
    r.converged = trace.converged;
  } catch (const NumericalError& e) {
    r.status = sanitize_status(std::string("numerical-error: ") + e.what());
    r.jisi = std::numeric_limits<double>::quiet_NaN();
    r.final_cost = std::numeric_limits<double>::quiet_NaN();
    r.time_s = e.trace().wall_seconds;
    r.iterations = e.trace().iterations_used;
  } catch (const SingularMatrixError& e) {
    r.status = sanitize_status(std::string("singular-matrix: ") + e.what());
    r.jisi = std::numeric_limits<double>::quiet_NaN();
    r.final_cost = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

BenchmarkOutput run_benchmark(const ExperimentConfig& config) {
  config.validate();

  std::vector<TrialSpec> specs;
  {
    // The instance seed ignores the algorithm, so solvers compete on the
    // same data. Uniqueness across cells is enforced with a deterministic
    // re-salt; duplicate draws are astronomically unlikely but cheap to rule
    // out.
    std::unordered_set<std::uint64_t> used;
    for (CaseLabel c : config.cases) {
      for (int K : config.K_list) {
        for (int N : config.N_list) {
          for (int trial = 0; trial < config.n_trials; ++trial) {
            std::uint64_t seed = trial_seed(config.base_seed, c, K, N, trial);
            while (!used.insert(seed).second) seed = mix64(seed);
            for (Algo algo : config.algos) {
              specs.push_back({c, K, N, config.V, trial, seed, algo});
            }
          }
        }
      }
    }
  }
  // Grid order for outputs: case, K, N, algo, trial.
  std::sort(specs.begin(), specs.end(),
            [](const TrialSpec& a, const TrialSpec& b) {
              return std::tuple(a.case_label, a.K, a.N, a.algo, a.trial) <
                     std::tuple(b.case_label, b.K, b.N, b.algo, b.trial);
            });

  BenchmarkOutput out;
  out.results.resize(specs.size());

  unsigned workers = config.parallelism > 0
                         ? static_cast<unsigned>(config.parallelism)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(specs.size()));

  auto work = [&](std::size_t i) {
    out.results[i] = run_trial(specs[i], config.palm, config.ivagv);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next.fetch_add(1); i < specs.size();
               i = next.fetch_add(1)) {
            work(i);
          }
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  out.summary = summarize(out.results);

  if (!config.output_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    out.raw_csv = config.output_dir / "raw_trials.csv";
    out.summary_csv = config.output_dir / "summary.csv";
    out.scatter_csv = config.output_dir / "scatter.csv";
    write_raw_csv(out.raw_csv, out.results);
    write_summary_csv(out.summary_csv, out.summary);
    write_scatter_csv(out.scatter_csv, out.summary);
  }
  return out;
}

void write_raw_csv(const fs::path& path, const std::vector<TrialResult>& results) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << kRawHeader << "\n";
  for (const TrialResult& r : results) {
    out << r.case_label << ',' << r.K << ',' << r.N << ',' << r.V << ','
        << r.algo << ',' << r.seed << ',' << format_double(r.jisi) << ','
        << format_double(r.time_s) << ',' << r.iterations << ','
        << format_double(r.final_cost) << ',' << (r.converged ? 1 : 0) << ','
        << sanitize_status(r.status) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<TrialResult> read_raw_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRawHeader) {
    throw IoError(path.string() + ": unexpected CSV header");
  }
  std::vector<TrialResult> results;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 12) {
      throw IoError(path.string() + ": line " + std::to_string(line_no) +
                    " has " + std::to_string(fields.size()) +
                    " fields, expected 12");
    }
    try {
      TrialResult r;
      r.case_label = fields[0];
      r.K = std::stoi(fields[1]);
      r.N = std::stoi(fields[2]);
      r.V = std::stoi(fields[3]);
      r.algo = fields[4];
      r.seed = std::stoull(fields[5]);
      r.jisi = std::stod(fields[6]);
      r.time_s = std::stod(fields[7]);
      r.iterations = std::stoi(fields[8]);
      r.final_cost = std::stod(fields[9]);
      r.converged = std::stoi(fields[10]) != 0;
      r.status = fields[11];
      results.push_back(std::move(r));
    } catch (const std::exception&) {
      throw IoError(path.string() + ": line " + std::to_string(line_no) +
                    " is malformed");
    }
  }
  return results;
}

void write_summary_csv(const fs::path& path,
                       const std::vector<SummaryRow>& summary) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "case,K,N,V,algo,n_trials,mean_jisi,std_jisi,mean_time,std_time\n";
  for (const SummaryRow& s : summary) {
    out << s.case_label << ',' << s.K << ',' << s.N << ',' << s.V << ','
        << s.algo << ',' << s.n_trials << ',' << format_double(s.mean_jisi)
        << ',' << format_double(s.std_jisi) << ',' << format_double(s.mean_time)
        << ',' << format_double(s.std_time) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_scatter_csv(const fs::path& path,
                       const std::vector<SummaryRow>& summary) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "case,K,N,V,algo,mean_time,mean_jisi,std_time,std_jisi\n";
  for (const SummaryRow& s : summary) {
    out << s.case_label << ',' << s.K << ',' << s.N << ',' << s.V << ','
        << s.algo << ',' << format_double(s.mean_time) << ','
        << format_double(s.mean_jisi) << ',' << format_double(s.std_time)
        << ',' << format_double(s.std_jisi) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace iva
