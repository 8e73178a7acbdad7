#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "hazard/dataset.hpp"
#include "hazard/types.hpp"

namespace hazard {

// Configuration of one benchmark invocation. Expansion of "both"/"all"
// shorthands happens in the CLI; here every list is explicit. Job order —
// and therefore group order in the report, the SVG, and the table — is
// dataset-major, then model, then source, then seed.
struct BenchConfig {
  std::vector<std::string> datasets;  // from {"pbc", "gbcsg2"}
  std::vector<std::string> models;    // model tags
  std::vector<std::string> sources;   // from {"default", "search"}
  std::vector<long long> seeds;
  double test_fraction = 0.25;
  std::size_t search_budget = 50;
  std::size_t search_folds = 5;
  bool drop_id_feature = false;
  bool save_models = false;
  std::string data_dir = "data";
  std::string out_dir;
  std::size_t threads = 0;  // 0 = HAZARD_BENCH_THREADS, else hardware
};

// Throws input_error if the configuration is not runnable.
void validate_config(const BenchConfig& config);

// One (dataset, model, source, seed) trial. All seeds recorded so the run
// can be replayed in isolation; timing fields are the only values that vary
// between identical invocations.
struct BenchmarkRun {
  std::string dataset;
  std::string model;
  std::string source;
  long long seed = 0;

  std::uint64_t split_seed = 0;
  std::uint64_t search_seed = 0;
  std::uint64_t model_seed = 0;
  nlohmann::json config;  // hyperparameters the final fit used

  std::size_t train_n = 0, test_n = 0;
  std::size_t train_events = 0, test_events = 0;

  double c_index = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_pairs = 0;

  double search_score = std::numeric_limits<double>::quiet_NaN();
  std::size_t search_failed_trials = 0;

  bool failed = false;
  std::string error;

  double search_seconds = 0.0;
  double fit_seconds = 0.0;
  double total_seconds = 0.0;
  std::string model_path;  // when --save-models
};

struct BenchmarkReport {
  nlohmann::json document;         // canonical report (no timing fields)
  std::vector<BenchmarkRun> runs;  // job order
  bool complete = true;            // no failed runs
};

// Deterministic per-run seed derivations, shared with the replay path.
std::uint64_t bench_job_key(const std::string& dataset, const std::string& model,
                            const std::string& source);

// Executes one trial against an already loaded dataset. Never throws for
// model-level failures; those come back with failed = true.
BenchmarkRun run_single(const SurvivalDataset& data, const std::string& model,
                        const std::string& source, long long seed,
                        const BenchConfig& config);

// Runs the whole grid in a worker pool (size from config.threads, the
// HAZARD_BENCH_THREADS env var, or hardware concurrency) and writes
// config.json, runs.jsonl, report.json, table.csv and one boxplot SVG per
// dataset under config.out_dir. Results are independent of pool size.
BenchmarkReport run_benchmark(const BenchConfig& config);

// Emitters over a saved report document (also used by `bench plot/table`).
// The SVG scales values with the report's own stats; groups without
// successful runs are skipped (collected into `skipped` when non-null).
std::string render_boxplot_svg(const nlohmann::json& report,
                               const std::string& dataset,
                               std::vector<std::string>* skipped = nullptr);
std::string render_table_csv(const nlohmann::json& report);

}  // namespace hazard
