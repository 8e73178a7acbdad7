#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hazard/bench.hpp"
#include "hazard/error.hpp"
#include "hazard/models.hpp"
#include "hazard/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitIncomplete = 4;

// Seed lists: comma-separated integers and inclusive "a..b" ranges,
// e.g. "0..24" or "0,5,10..12".
std::vector<long long> parse_seeds(const std::string& text) {
  std::vector<long long> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string token = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (token.empty())
      throw hazard::input_error("--seeds: empty entry in '" + text + "'");
    const std::size_t dots = token.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoll(token));
      } else {
        const long long a = std::stoll(token.substr(0, dots));
        const long long b = std::stoll(token.substr(dots + 2));
        if (b < a)
          throw hazard::input_error("--seeds: empty range '" + token + "'");
        if (b - a >= 100000)
          throw hazard::input_error("--seeds: range too large '" + token + "'");
        for (long long s = a; s <= b; ++s) seeds.push_back(s);
      }
    } catch (const std::invalid_argument&) {
      throw hazard::input_error("--seeds: cannot parse '" + token + "'");
    } catch (const std::out_of_range&) {
      throw hazard::input_error("--seeds: out of range '" + token + "'");
    }
    if (comma == text.size()) break;
  }
  return seeds;
}

std::vector<std::string> parse_models(const std::string& text) {
  if (text == "all") return hazard::model_tags();
  std::vector<std::string> models;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string token = text.substr(pos, comma - pos);
    if (!token.empty()) models.push_back(token);
    if (comma == text.size()) break;
    pos = comma + 1;
  }
  return models;
}

nlohmann::json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hazard::input_error("cannot open report: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw hazard::input_error("report " + path + ": " + e.what());
  }
  if (j.value("format", "") != "hazard-bench-report")
    throw hazard::input_error("report " + path + ": not a benchmark report");
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hazard::input_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw hazard::input_error("write failed: " + path);
}

int cmd_run(const std::string& dataset_opt, const std::string& models_opt,
            const std::string& source_opt, const std::string& seeds_opt,
            double test_fraction, std::size_t budget, std::size_t folds,
            const std::string& out_dir, const std::string& data_dir,
            bool drop_id, bool save_models) {
  hazard::BenchConfig config;
  try {
    if (dataset_opt == "both") config.datasets = {"pbc", "gbcsg2"};
    else config.datasets = {dataset_opt};
    config.models = parse_models(models_opt);
    if (source_opt == "both") config.sources = {"default", "search"};
    else config.sources = {source_opt};
    config.seeds = parse_seeds(seeds_opt);
    config.test_fraction = test_fraction;
    config.search_budget = budget;
    config.search_folds = folds;
    config.out_dir = out_dir;
    config.data_dir = data_dir;
    config.drop_id_feature = drop_id;
    config.save_models = save_models;
    hazard::validate_config(config);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  // Pre-flight the loaders so data problems get their own exit code.
  try {
    for (const auto& name : config.datasets)
      hazard::load_dataset(name, config.data_dir);
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitDataset;
  }

  try {
    const hazard::BenchmarkReport report = hazard::run_benchmark(config);
    std::size_t failed = 0;
    for (const auto& r : report.runs) failed += r.failed;
    std::cout << "wrote " << config.out_dir << "/report.json ("
              << report.runs.size() << " runs, " << failed << " failed)\n";
    if (!report.complete) {
      for (const auto& r : report.runs)
        if (r.failed)
          std::cerr << "failed: " << r.dataset << "/" << r.model << "/"
                    << r.source << " seed " << r.seed << ": " << r.error << "\n";
      return kExitIncomplete;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_plot(const std::string& report_path, const std::string& out_dir) {
  try {
    const nlohmann::json report = read_report(report_path);
    std::vector<std::string> datasets;
    for (const auto& g : report.at("groups")) {
      const std::string d = g.at("dataset").get<std::string>();
      if (std::find(datasets.begin(), datasets.end(), d) == datasets.end())
        datasets.push_back(d);
    }
    std::filesystem::create_directories(out_dir);
    for (const auto& d : datasets) {
      std::vector<std::string> skipped;
      const std::string svg = hazard::render_boxplot_svg(report, d, &skipped);
      for (const auto& w : skipped)
        std::cerr << "warning: boxplot " << d << ": skipped empty group " << w
                  << "\n";
      const std::string path = out_dir + "/boxplot_" + d + ".svg";
      write_file(path, svg);
      std::cout << "wrote " << path << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_table(const std::string& report_path, const std::string& out_path) {
  try {
    const nlohmann::json report = read_report(report_path);
    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_file(out_path, hazard::render_table_csv(report));
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survival analysis benchmark: seeded train/test comparison of "
               "seven risk models on the pbc and gbcsg2 datasets"};
  app.set_version_flag("--version", std::string(hazard::version_string));
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute the benchmark grid");
  std::string dataset = "both", models = "all", source = "both";
  std::string seeds = "0..24", out_dir, data_dir = "data";
  double test_fraction = 0.25;
  std::size_t budget = 50, folds = 5;
  bool drop_id = false, save_models = false;
  run->add_option("--dataset", dataset, "pbc, gbcsg2, or both")
      ->check(CLI::IsMember({"pbc", "gbcsg2", "both"}))
      ->capture_default_str();
  run->add_option("--models", models, "comma-separated model tags, or all")
      ->capture_default_str();
  run->add_option("--source", source, "hyperparameters: default, search, or both")
      ->check(CLI::IsMember({"default", "search", "both"}))
      ->capture_default_str();
  run->add_option("--seeds", seeds, "seed list, e.g. 0..24 or 0,1,5")
      ->capture_default_str();
  run->add_option("--test-fraction", test_fraction, "holdout fraction")
      ->capture_default_str();
  run->add_option("--search-budget", budget, "random search configurations")
      ->capture_default_str();
  run->add_option("--folds", folds, "cross-validation folds for the search")
      ->capture_default_str();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--data-dir", data_dir, "directory with <name>.csv files")
      ->capture_default_str();
  run->add_flag("--drop-id-feature", drop_id,
                "drop the pbc case-number column before fitting");
  run->add_flag("--save-models", save_models,
                "persist every fitted model under <out>/models/");

  // plot
  auto* plot = app.add_subcommand("plot", "re-render boxplot SVGs from a report");
  std::string report_path, plot_out;
  plot->add_option("--report", report_path, "report.json from a run")->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  // table
  auto* table = app.add_subcommand("table", "re-render the CSV table from a report");
  std::string table_report, table_out;
  table->add_option("--report", table_report, "report.json from a run")->required();
  table->add_option("--out", table_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (run->parsed())
    return cmd_run(dataset, models, source, seeds, test_fraction, budget, folds,
                   out_dir, data_dir, drop_id, save_models);
  if (plot->parsed()) return cmd_plot(report_path, plot_out);
  return cmd_table(table_report, table_out);
}
