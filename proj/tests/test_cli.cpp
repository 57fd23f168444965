#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "iva/bench.hpp"
#include "iva/dataset_io.hpp"

using namespace iva;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("iva_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path stdout_file() { return scratch_dir() / "stdout.txt"; }

// Runs the benchmark binary with the given arguments, captures stdout, and
// returns the exit code.
int run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") +
                          IVA_BENCH_BIN + " " + args + " > " +
                          stdout_file().string() + " 2> " +
                          (scratch_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// The tiny instance most tests share.
const char* kDataPrefix = "caseB_K2_N3_V500_t000";

void generate_instance() {
  static bool done = false;
  if (done) return;
  const int code = run_cli("generate --case B --K 2 --N 3 --V 500 --trials 1 "
                           "--seed 7 --out " + (scratch_dir() / "gen").string());
  REQUIRE(code == 0);
  done = true;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("solve --help") == 0);
  CHECK(run_cli("") == 1);               // a subcommand is required
  CHECK(run_cli("frobnicate") == 1);     // unknown subcommand
  CHECK(run_cli("solve --data x") == 1); // missing required --truth
}

TEST_CASE("generate writes dataset and ground-truth pairs") {
  generate_instance();
  const fs::path gen = scratch_dir() / "gen";
  CHECK(fs::exists(gen / (std::string(kDataPrefix) + ".json")));
  CHECK(fs::exists(gen / (std::string(kDataPrefix) + ".bin")));
  CHECK(fs::exists(gen / (std::string(kDataPrefix) + "_gt.json")));
  CHECK(fs::exists(gen / (std::string(kDataPrefix) + "_gt.bin")));

  const DatasetStack data = read_dataset(gen / kDataPrefix);
  CHECK(data.dims().K == 2);
  CHECK(data.dims().N == 3);
  CHECK(data.dims().V == 500);
  const GroundTruth truth =
      read_ground_truth(gen / (std::string(kDataPrefix) + "_gt"));
  CHECK(truth.case_label == "B");

  // Same seed, fresh directory: byte-identical payloads.
  REQUIRE(run_cli("generate --case B --K 2 --N 3 --V 500 --trials 1 --seed 7 "
                  "--out " + (scratch_dir() / "gen2").string()) == 0);
  CHECK(slurp(gen / (std::string(kDataPrefix) + ".bin")) ==
        slurp(scratch_dir() / "gen2" / (std::string(kDataPrefix) + ".bin")));

  CHECK(run_cli("generate --case Z --out " + (scratch_dir() / "gz").string()) ==
        1);
  CHECK(run_cli("generate --case A --K 2 --N 3 --V 6 --out " +
                (scratch_dir() / "gv").string()) == 1);
}

TEST_CASE("solve writes a result row, a trace, and a demixing file") {
  generate_instance();
  const fs::path gen = scratch_dir() / "gen";
  const std::string data = (gen / kDataPrefix).string();
  const std::string truth = data + "_gt";
  const std::string out_csv = (scratch_dir() / "solve.csv").string();
  const std::string trace_path = (scratch_dir() / "trace.json").string();
  const std::string west_prefix = (scratch_dir() / "west").string();

  REQUIRE(run_cli("solve --data " + data + " --truth " + truth +
                  " --algo palm --out " + out_csv + " --trace " + trace_path +
                  " --save-demixing " + west_prefix) == 0);

  const auto rows = read_raw_csv(out_csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].case_label == "B");
  CHECK(rows[0].algo == "palm");
  CHECK(rows[0].status == "ok");
  CHECK(rows[0].converged);
  CHECK(rows[0].jisi >= 0.0);
  CHECK(rows[0].jisi <= 1.0);

  // Stdout reports the same score.
  const std::string printed = slurp(stdout_file());
  const auto pos = printed.find("jisi=");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(printed.substr(pos + 5)) == rows[0].jisi);

  // The trace is valid JSON with a non-increasing cost column.
  json trace;
  std::ifstream(trace_path) >> trace;
  CHECK(trace["algo"] == "palm");
  CHECK(trace["converged"].get<bool>());
  const auto& records = trace["records"];
  REQUIRE(records.size() >= 2);
  for (std::size_t i = 1; i < records.size(); ++i) {
    CHECK(records[i]["cost"].get<double>() <=
          records[i - 1]["cost"].get<double>() + 1e-10);
  }

  // Scoring the saved demixing reproduces the reported jisi exactly.
  REQUIRE(run_cli("jisi --demixing " + west_prefix + " --truth " + truth) == 0);
  CHECK(std::stod(slurp(stdout_file())) == rows[0].jisi);

  // The gradient baseline runs on the same files.
  CHECK(run_cli("solve --data " + data + " --truth " + truth +
                " --algo ivagv") == 0);

  CHECK(run_cli("solve --data " + data + " --truth " + truth +
                " --algo sgd") == 1);
  CHECK(run_cli("solve --data " + (gen / "absent").string() + " --truth " +
                truth) == 3);
  // Mismatched ground truth: solve against a different instance's truth.
  REQUIRE(run_cli("generate --case B --K 3 --N 3 --V 500 --trials 1 --seed 7 "
                  "--out " + (scratch_dir() / "gen_k3").string()) == 0);
  CHECK(run_cli("solve --data " + data + " --truth " +
                (scratch_dir() / "gen_k3" / "caseB_K3_N3_V500_t000_gt")
                    .string()) == 1);
}

TEST_CASE("solver overrides reach the solver") {
  generate_instance();
  const fs::path gen = scratch_dir() / "gen";
  const std::string data = (gen / kDataPrefix).string();
  const std::string truth = data + "_gt";
  const std::string out_csv = (scratch_dir() / "capped.csv").string();

  // A one-iteration cap must show up in the result row.
  REQUIRE(run_cli("solve --data " + data + " --truth " + truth +
                  " --algo palm --palm-max-outer 1 --out " + out_csv) == 0);
  const auto rows = read_raw_csv(out_csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].iterations == 1);
  CHECK_FALSE(rows[0].converged);

  // Invalid solver parameters are config errors.
  CHECK(run_cli("solve --data " + data + " --truth " + truth +
                " --gamma-w 1.5") == 1);
  CHECK(run_cli("solve --data " + data + " --truth " + truth +
                " --init sideways") == 1);
}

TEST_CASE("benchmark grid via flags") {
  const std::string out_dir = (scratch_dir() / "bench").string();
  REQUIRE(run_cli("benchmark --case B --K 2 --N 3 --V 500 --trials 2 "
                  "--algo palm,ivagv --seed 3 --out " + out_dir) == 0);

  const auto rows = read_raw_csv(fs::path(out_dir) / "raw_trials.csv");
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.status == "ok");

  const std::string printed = slurp(stdout_file());
  CHECK(printed.find("mean_jisi") != std::string::npos);
  CHECK(printed.find("palm") != std::string::npos);
  CHECK(printed.find("ivagv") != std::string::npos);

  CHECK(fs::exists(fs::path(out_dir) / "summary.csv"));
  CHECK(fs::exists(fs::path(out_dir) / "scatter.csv"));

  // Bad thread override is rejected before any work happens.
  CHECK(run_cli("benchmark --case B --K 2 --N 3 --V 500 --trials 1",
                "IVA_THREADS=abc") == 1);
}

TEST_CASE("benchmark via config file") {
  const fs::path cfg_path = scratch_dir() / "experiment.json";
  const std::string out_dir = (scratch_dir() / "bench_cfg").string();
  {
    json cfg = {{"cases", {"B"}},
                {"K_list", {2}},
                {"N_list", {3}},
                {"V", 500},
                {"n_trials", 1},
                {"base_seed", 3},
                {"algos", {"palm"}},
                {"output_dir", out_dir},
                {"parallelism", 1},
                {"palm", {{"delta", 1e-8}}}};
    std::ofstream(cfg_path) << cfg.dump(2);
  }
  REQUIRE(run_cli("benchmark --config " + cfg_path.string()) == 0);
  const auto rows = read_raw_csv(fs::path(out_dir) / "raw_trials.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].algo == "palm");

  // Grid flags cannot be mixed with a config file.
  CHECK(run_cli("benchmark --config " + cfg_path.string() + " --V 500") == 1);
  // Missing and malformed config files.
  CHECK(run_cli("benchmark --config " + (scratch_dir() / "nope.json").string())
        == 3);
  const fs::path broken = scratch_dir() / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run_cli("benchmark --config " + broken.string()) == 1);
  const fs::path unknown = scratch_dir() / "unknown.json";
  std::ofstream(unknown) << R"({"casez": ["B"]})";
  CHECK(run_cli("benchmark --config " + unknown.string()) == 1);
  // Empty algo list fails validation before writing anything.
  const fs::path empty_algos = scratch_dir() / "empty_algos.json";
  std::ofstream(empty_algos)
      << R"({"cases":["B"],"K_list":[2],"N_list":[3],"V":500,"algos":[],)"
      << R"("output_dir":")" << (scratch_dir() / "never").string() << R"("})";
  CHECK(run_cli("benchmark --config " + empty_algos.string()) == 1);
  CHECK_FALSE(fs::exists(scratch_dir() / "never"));
}
