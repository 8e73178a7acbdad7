#include "hazard/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "hazard/error.hpp"
#include "hazard/metrics.hpp"
#include "hazard/models.hpp"
#include "hazard/rng.hpp"
#include "hazard/serialize.hpp"
#include "hazard/tuning.hpp"
#include "hazard/version.hpp"

namespace hazard {

namespace {

const std::vector<std::string> kDatasets = {"pbc", "gbcsg2"};
const std::vector<std::string> kSources = {"default", "search"};

std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw input_error("write failed: " + path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

template <typename T>
bool has_duplicates(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

// Canonical configuration block stamped into the report: exactly the values
// that determine results, none of the environment (paths, thread counts).
nlohmann::json canonical_config(const BenchConfig& c) {
  return {{"datasets", c.datasets},
          {"models", c.models},
          {"sources", c.sources},
          {"seeds", c.seeds},
          {"test_fraction", c.test_fraction},
          {"search_budget", c.search_budget},
          {"search_folds", c.search_folds},
          {"drop_id_feature", c.drop_id_feature}};
}

nlohmann::json run_to_json(const BenchmarkRun& r, bool with_timing) {
  nlohmann::json j = {{"dataset", r.dataset},
                      {"model", r.model},
                      {"source", r.source},
                      {"seed", r.seed},
                      {"split_seed", r.split_seed},
                      {"search_seed", r.search_seed},
                      {"model_seed", r.model_seed},
                      {"config", r.config},
                      {"train_n", r.train_n},
                      {"test_n", r.test_n},
                      {"train_events", r.train_events},
                      {"test_events", r.test_events},
                      {"c_index", r.c_index},
                      {"n_pairs", r.n_pairs},
                      {"failed", r.failed},
                      {"error", r.error}};
  if (r.source == "search") {
    j["search_score"] = r.search_score;
    j["search_failed_trials"] = r.search_failed_trials;
  }
  if (!r.model_path.empty()) j["model_path"] = r.model_path;
  if (with_timing) {
    j["search_seconds"] = r.search_seconds;
    j["fit_seconds"] = r.fit_seconds;
    j["total_seconds"] = r.total_seconds;
  }
  return j;
}

nlohmann::json stats_to_json(const BoxplotStats& s) {
  return {{"min", s.min}, {"q1", s.q1},   {"median", s.median},
          {"q3", s.q3},   {"max", s.max}, {"mean", s.mean}};
}

std::size_t pool_size(const BenchConfig& c, std::size_t n_jobs) {
  std::size_t n = c.threads;
  if (n == 0) {
    n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
  }
  if (const char* env = std::getenv("HAZARD_BENCH_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1)
      n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(1, std::min(n, std::max<std::size_t>(n_jobs, 1)));
}

std::string fmt(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// Shortest round-trip number text (what the JSON emitter produces), so CSV
// values equal report values exactly.
std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

void validate_config(const BenchConfig& c) {
  if (c.datasets.empty()) throw input_error("config: no datasets selected");
  for (const auto& d : c.datasets)
    if (!contains(kDatasets, d))
      throw input_error("config: unknown dataset '" + d + "'");
  if (has_duplicates(c.datasets)) throw input_error("config: duplicate dataset");
  if (c.models.empty()) throw input_error("config: no models selected");
  for (const auto& m : c.models)
    if (!is_model_tag(m)) throw input_error("config: unknown model '" + m + "'");
  if (has_duplicates(c.models)) throw input_error("config: duplicate model");
  if (c.sources.empty()) throw input_error("config: no sources selected");
  for (const auto& s : c.sources)
    if (!contains(kSources, s))
      throw input_error("config: unknown source '" + s + "'");
  if (has_duplicates(c.sources)) throw input_error("config: duplicate source");
  if (c.seeds.empty()) throw input_error("config: no seeds");
  if (has_duplicates(c.seeds)) throw input_error("config: duplicate seed");
  for (const auto s : c.seeds)
    if (s < 0) throw input_error("config: seeds must be >= 0");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0))
    throw input_error("config: test_fraction must be in (0, 1)");
  if (c.search_budget == 0) throw input_error("config: search_budget must be >= 1");
  if (c.search_folds < 2) throw input_error("config: folds must be >= 2");
  if (c.out_dir.empty()) throw input_error("config: output directory required");
}

std::uint64_t bench_job_key(const std::string& dataset, const std::string& model,
                            const std::string& source) {
  return fnv1a64(dataset + "|" + model + "|" + source);
}

BenchmarkRun run_single(const SurvivalDataset& data, const std::string& model,
                        const std::string& source, long long seed,
                        const BenchConfig& config) {
  BenchmarkRun r;
  r.dataset = data.name;
  r.model = model;
  r.source = source;
  r.seed = seed;
  r.split_seed = static_cast<std::uint64_t>(seed);
  const std::uint64_t base = derive_seed(bench_job_key(data.name, model, source),
                                         static_cast<std::uint64_t>(seed));
  r.search_seed = derive_seed(base, 0);
  r.model_seed = derive_seed(base, 1);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const TrainTestSplit split =
        split_train_test(data, config.test_fraction, r.split_seed);
    const SurvivalDataset train = data.subset(split.train_rows);
    const SurvivalDataset test = data.subset(split.test_rows);
    r.train_n = train.n();
    r.test_n = test.n();
    r.train_events = train.n_events();
    r.test_events = test.n_events();

    if (source == "search") {
      const auto ts = std::chrono::steady_clock::now();
      const SearchResult sr = random_search(model, train, config.search_budget,
                                            config.search_folds, r.search_seed);
      r.search_seconds = seconds_since(ts);
      r.config = sr.best_config;
      r.search_score = sr.best_score;
      for (const auto& trial : sr.trials) r.search_failed_trials += trial.failed;
    } else {
      r.config = default_config(model);
    }

    const auto tf = std::chrono::steady_clock::now();
    const AnyModel fitted = AnyModel::fit(model, r.config, train, r.model_seed);
    r.fit_seconds = seconds_since(tf);

    const std::vector<double> risks = fitted.predict_risk(test);
    const ConcordanceResult cr = concordance_index(test.time, test.event, risks);
    r.c_index = cr.index;
    r.n_pairs = cr.n_pairs;

    if (config.save_models && !config.out_dir.empty()) {
      r.model_path = config.out_dir + "/models/" + data.name + "_" + model + "_" +
                     source + "_s" + std::to_string(seed) + ".json";
      save_model(fitted, r.model_path);
    }
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
  r.total_seconds = seconds_since(t0);
  return r;
}

BenchmarkReport run_benchmark(const BenchConfig& config) {
  validate_config(config);

  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  if (config.save_models) fs::create_directories(config.out_dir + "/models");

  // Load phase: every selected dataset once, shared read-only by the pool.
  std::vector<LoadedDataset> loaded;
  std::vector<std::uint64_t> content_hashes;
  for (const auto& name : config.datasets) {
    const std::string path = config.data_dir + "/" + name + ".csv";
    LoadedDataset ld = load_dataset(name, config.data_dir);
    if (config.drop_id_feature && ld.data.drop_feature("id"))
      ld.meta.n_features = ld.data.p();
    loaded.push_back(std::move(ld));
    content_hashes.push_back(hash_file(path));
  }

  struct Job {
    std::size_t dataset_index;
    std::string model, source;
    long long seed;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < config.datasets.size(); ++d)
    for (const auto& m : config.models)
      for (const auto& s : config.sources) {
        if (s == "search" && !has_search_space(m)) continue;  // skipped group
        for (const auto seed : config.seeds) jobs.push_back({d, m, s, seed});
      }

  std::vector<BenchmarkRun> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      const Job& job = jobs[i];
      results[i] = run_single(loaded[job.dataset_index].data, job.model,
                              job.source, job.seed, config);
    }
  };
  const std::size_t n_workers = pool_size(config, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  // Assembly (single-threaded): groups in job order, stats over successes.
  nlohmann::json doc;
  doc["format"] = "hazard-bench-report";
  doc["schema_version"] = 1;
  doc["library_version"] = version_string;
  doc["config"] = canonical_config(config);
  doc["config_hash"] = hex64(fnv1a64(doc["config"].dump()));

  nlohmann::json datasets = nlohmann::json::array();
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    const LoadMetadata& meta = loaded[d].meta;
    datasets.push_back({{"name", config.datasets[d]},
                        {"content_hash", hex64(content_hashes[d])},
                        {"n_raw", meta.n_raw},
                        {"n_dropped", meta.n_dropped},
                        {"n_used", meta.n_used},
                        {"n_events", meta.n_events},
                        {"n_censored", meta.n_censored},
                        {"n_features", loaded[d].data.p()},
                        {"features", loaded[d].data.feature_names}});
  }
  doc["datasets"] = std::move(datasets);

  bool complete = true;
  std::size_t cursor = 0;
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t d = 0; d < config.datasets.size(); ++d)
    for (const auto& m : config.models)
      for (const auto& s : config.sources) {
        nlohmann::json g = {{"dataset", config.datasets[d]},
                            {"model", m},
                            {"source", s}};
        if (s == "search" && !has_search_space(m)) {
          g["skipped"] = true;
          g["skip_reason"] = "model has no hyperparameter search space";
          g["n_runs"] = 0;
          g["n_failed"] = 0;
          g["stats"] = nullptr;
          groups.push_back(std::move(g));
          continue;
        }
        g["skipped"] = false;
        nlohmann::json seeds = nlohmann::json::array();
        nlohmann::json cs = nlohmann::json::array();
        std::vector<double> ok_values;
        std::size_t n_failed = 0;
        for (std::size_t k = 0; k < config.seeds.size(); ++k, ++cursor) {
          const BenchmarkRun& r = results[cursor];
          seeds.push_back(r.seed);
          if (r.failed) {
            ++n_failed;
            cs.push_back(nullptr);
          } else {
            cs.push_back(r.c_index);
            ok_values.push_back(r.c_index);
          }
        }
        g["seeds"] = std::move(seeds);
        g["c_index"] = std::move(cs);
        g["n_runs"] = config.seeds.size();
        g["n_failed"] = n_failed;
        g["stats"] =
            ok_values.empty() ? nlohmann::json() : stats_to_json(boxplot_stats(ok_values));
        if (n_failed > 0) complete = false;
        groups.push_back(std::move(g));
      }
  doc["groups"] = std::move(groups);
  doc["complete"] = complete;

  // Persist everything.
  nlohmann::json snapshot = canonical_config(config);
  snapshot["data_dir"] = config.data_dir;
  snapshot["out_dir"] = config.out_dir;
  snapshot["save_models"] = config.save_models;
  snapshot["library_version"] = version_string;
  write_text(config.out_dir + "/config.json", snapshot.dump(2) + "\n");

  std::string lines;
  for (const auto& r : results) lines += run_to_json(r, true).dump() + "\n";
  write_text(config.out_dir + "/runs.jsonl", lines);

  write_text(config.out_dir + "/report.json", doc.dump(2) + "\n");
  write_text(config.out_dir + "/table.csv", render_table_csv(doc));
  for (const auto& name : config.datasets) {
    std::vector<std::string> skipped;
    const std::string svg = render_boxplot_svg(doc, name, &skipped);
    for (const auto& w : skipped)
      std::cerr << "warning: boxplot " << name << ": skipped empty group " << w
                << "\n";
    write_text(config.out_dir + "/boxplot_" + name + ".svg", svg);
  }

  BenchmarkReport report;
  report.document = std::move(doc);
  report.runs = std::move(results);
  report.complete = complete;
  return report;
}

std::string render_table_csv(const nlohmann::json& report) {
  std::string out = "dataset,model,source,mean,median,q1,q3,min,max,n_runs\n";
  if (!report.contains("groups")) return out;
  for (const auto& g : report.at("groups")) {
    if (g.value("skipped", false) || g.at("stats").is_null()) continue;
    const auto& s = g.at("stats");
    const std::size_t n_ok = g.at("n_runs").get<std::size_t>() -
                             g.at("n_failed").get<std::size_t>();
    out += g.at("dataset").get<std::string>() + "," +
           g.at("model").get<std::string>() + "," +
           g.at("source").get<std::string>() + "," +
           num(s.at("mean").get<double>()) + "," +
           num(s.at("median").get<double>()) + "," +
           num(s.at("q1").get<double>()) + "," +
           num(s.at("q3").get<double>()) + "," +
           num(s.at("min").get<double>()) + "," +
           num(s.at("max").get<double>()) + "," + std::to_string(n_ok) + "\n";
  }
  return out;
}

std::string render_boxplot_svg(const nlohmann::json& report,
                               const std::string& dataset,
                               std::vector<std::string>* skipped) {
  struct Box {
    std::string label;
    BoxplotStats s;
  };
  std::vector<Box> boxes;
  if (report.contains("groups")) {
    for (const auto& g : report.at("groups")) {
      if (g.at("dataset").get<std::string>() != dataset) continue;
      const std::string label = g.at("model").get<std::string>() + " (" +
                                g.at("source").get<std::string>() + ")";
      if (g.value("skipped", false) || g.at("stats").is_null()) {
        if (skipped) skipped->push_back(label);
        continue;
      }
      const auto& js = g.at("stats");
      Box b;
      b.label = label;
      b.s.min = js.at("min").get<double>();
      b.s.q1 = js.at("q1").get<double>();
      b.s.median = js.at("median").get<double>();
      b.s.q3 = js.at("q3").get<double>();
      b.s.max = js.at("max").get<double>();
      b.s.mean = js.at("mean").get<double>();
      boxes.push_back(std::move(b));
    }
  }

  // Fixed 12 x 7.5 aspect (960 x 600 user units).
  const double width = 960, height = 600;
  const double ml = 72, mr = 24, mt = 48, mb = 128;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double lo = 1.0, hi = 0.0;
  for (const auto& b : boxes) {
    lo = std::min({lo, b.s.min, b.s.mean});
    hi = std::max({hi, b.s.max, b.s.mean});
  }
  if (boxes.empty()) { lo = 0.0; hi = 1.0; }
  double pad = std::max(0.01, 0.05 * (hi - lo));
  lo = std::max(0.0, std::floor((lo - pad) / 0.05) * 0.05);
  hi = std::min(1.0, std::ceil((hi + pad) / 0.05) * 0.05);
  if (hi - lo < 0.05) { lo = std::max(0.0, lo - 0.05); hi = std::min(1.0, hi + 0.05); }
  const auto ypos = [&](double v) { return mt + ph * (hi - v) / (hi - lo); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width, 0) +
         "\" height=\"" + fmt(height, 0) + "\" viewBox=\"0 0 " + fmt(width, 0) +
         " " + fmt(height, 0) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(width, 0) + "\" height=\"" +
         fmt(height, 0) + "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + fmt(width / 2, 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\" fill=\"#222222\">" +
         dataset + ": test concordance by model</text>\n";
  svg += "<text x=\"" + fmt(width / 2, 2) +
         "\" y=\"40\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"11\" fill=\"#555555\">box q1-q3, red line median, green "
         "triangle mean, whiskers min-max</text>\n";

  // Gridlines and y ticks at 0.05 steps.
  for (long k = std::lround(std::ceil(lo / 0.05 - 1e-9));
       k <= std::lround(std::floor(hi / 0.05 + 1e-9)); ++k) {
    const double v = 0.05 * static_cast<double>(k);
    if (v < lo - 1e-12 || v > hi + 1e-12) continue;
    const double y = ypos(v);
    svg += "<line x1=\"" + fmt(ml, 2) + "\" y1=\"" + fmt(y, 2) + "\" x2=\"" +
           fmt(ml + pw, 2) + "\" y2=\"" + fmt(y, 2) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(ml - 8, 2) + "\" y=\"" + fmt(y + 4, 2) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\"#333333\">" +
           fmt(v, 2) + "</text>\n";
  }
  svg += "<rect x=\"" + fmt(ml, 2) + "\" y=\"" + fmt(mt, 2) + "\" width=\"" +
         fmt(pw, 2) + "\" height=\"" + fmt(ph, 2) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text transform=\"rotate(-90 18 " + fmt(mt + ph / 2, 2) +
         ")\" x=\"18\" y=\"" + fmt(mt + ph / 2, 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "fill=\"#222222\">concordance index</text>\n";

  const std::size_t n = boxes.size();
  for (std::size_t i = 0; i < n; ++i) {
    const BoxplotStats& s = boxes[i].s;
    const double slot = pw / static_cast<double>(n);
    const double cx = ml + slot * (static_cast<double>(i) + 0.5);
    const double bw = std::min(44.0, slot * 0.55);
    const double half = bw / 2.0;

    // Whiskers with caps.
    svg += "<line x1=\"" + fmt(cx, 2) + "\" y1=\"" + fmt(ypos(s.min), 2) +
           "\" x2=\"" + fmt(cx, 2) + "\" y2=\"" + fmt(ypos(s.q1), 2) +
           "\" stroke=\"#1f477a\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt(cx, 2) + "\" y1=\"" + fmt(ypos(s.q3), 2) +
           "\" x2=\"" + fmt(cx, 2) + "\" y2=\"" + fmt(ypos(s.max), 2) +
           "\" stroke=\"#1f477a\" stroke-width=\"1\"/>\n";
    for (const double v : {s.min, s.max})
      svg += "<line x1=\"" + fmt(cx - half * 0.5, 2) + "\" y1=\"" +
             fmt(ypos(v), 2) + "\" x2=\"" + fmt(cx + half * 0.5, 2) +
             "\" y2=\"" + fmt(ypos(v), 2) +
             "\" stroke=\"#1f477a\" stroke-width=\"1\"/>\n";
    // Interquartile box.
    svg += "<rect x=\"" + fmt(cx - half, 2) + "\" y=\"" + fmt(ypos(s.q3), 2) +
           "\" width=\"" + fmt(bw, 2) + "\" height=\"" +
           fmt(std::max(0.0, ypos(s.q1) - ypos(s.q3)), 2) +
           "\" fill=\"#aec7e8\" stroke=\"#1f477a\" stroke-width=\"1\"/>\n";
    // Median line and its value (the value is what tests read back).
    svg += "<line x1=\"" + fmt(cx - half, 2) + "\" y1=\"" +
           fmt(ypos(s.median), 2) + "\" x2=\"" + fmt(cx + half, 2) + "\" y2=\"" +
           fmt(ypos(s.median), 2) +
           "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(cx, 2) + "\" y=\"" + fmt(ypos(s.median) - 5, 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"9\" "
           "fill=\"#d62728\" class=\"median-value\">" +
           fmt(s.median, 3) + "</text>\n";
    // Mean marker.
    svg += "<path d=\"M " + fmt(cx - 5, 2) + " " + fmt(ypos(s.mean) + 4, 2) +
           " L " + fmt(cx + 5, 2) + " " + fmt(ypos(s.mean) + 4, 2) + " L " +
           fmt(cx, 2) + " " + fmt(ypos(s.mean) - 5, 2) +
           " Z\" fill=\"#2ca02c\"/>\n";
    // Group label.
    const double lx = cx, lyv = mt + ph + 16;
    svg += "<text transform=\"rotate(-35 " + fmt(lx, 2) + " " + fmt(lyv, 2) +
           ")\" x=\"" + fmt(lx, 2) + "\" y=\"" + fmt(lyv, 2) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
           "fill=\"#222222\">" +
           boxes[i].label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace hazard
