#include "hazard/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hazard/error.hpp"
#include "hazard/rng.hpp"

namespace hazard {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

bool is_na(const std::string& s) { return s.empty() || s == "NA"; }

double parse_number(const std::string& s, std::size_t line_no,
                    const std::string& column) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || !std::isfinite(v))
    throw input_error("csv line " + std::to_string(line_no) + ": column '" +
                      column + "' has non-numeric value '" + s + "'");
  return v;
}

// One cell decoder per column: returns the numeric encoding, or unset for NA.
struct ColumnCodec {
  std::string name;
  // kind: n = numeric, c = categorical with listed levels encoded by position
  char kind = 'n';
  std::vector<std::string> levels;
  std::vector<double> level_codes;

  double decode(const std::string& cell, std::size_t line_no) const {
    if (kind == 'n') return parse_number(cell, line_no, name);
    for (std::size_t k = 0; k < levels.size(); ++k)
      if (cell == levels[k]) return level_codes[k];
    throw input_error("csv line " + std::to_string(line_no) + ": column '" +
                      name + "' has unknown category '" + cell + "'");
  }
};

struct Schema {
  std::string dataset_name;
  std::vector<ColumnCodec> columns;  // all columns, in file order
  std::string time_column;
  std::string event_column;
};

LoadedDataset load_with_schema(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw input_error("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  if (header.size() != schema.columns.size())
    throw input_error(path + ": expected " +
                      std::to_string(schema.columns.size()) +
                      " columns, found " + std::to_string(header.size()));
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] != schema.columns[j].name)
      throw input_error(path + ": column " + std::to_string(j + 1) +
                        " is '" + header[j] + "', expected '" +
                        schema.columns[j].name + "'");

  std::size_t time_idx = 0, event_idx = 0;
  std::vector<std::size_t> feature_idx;
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    if (schema.columns[j].name == schema.time_column) time_idx = j;
    else if (schema.columns[j].name == schema.event_column) event_idx = j;
    else feature_idx.push_back(j);
  }

  LoadedDataset out;
  out.data.name = schema.dataset_name;
  for (auto j : feature_idx)
    out.data.feature_names.push_back(schema.columns[j].name);

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != schema.columns.size())
      throw input_error(path + " line " + std::to_string(line_no) +
                        ": wrong field count");
    ++out.meta.n_raw;
    if (std::any_of(cells.begin(), cells.end(),
                    [](const std::string& c) { return is_na(c); })) {
      ++out.meta.n_dropped;
      continue;
    }
    std::vector<double> row(schema.columns.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      row[j] = schema.columns[j].decode(cells[j], line_no);
    if (!(row[time_idx] > 0))
      throw input_error(path + " line " + std::to_string(line_no) +
                        ": nonpositive time");
    const double ev = row[event_idx];
    if (ev != 0.0 && ev != 1.0)
      throw input_error(path + " line " + std::to_string(line_no) +
                        ": event indicator must be 0 or 1");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error(path + ": no usable rows");

  const std::size_t n = rows.size();
  out.data.x.resize(static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(feature_idx.size()));
  out.data.time.resize(n);
  out.data.event.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < feature_idx.size(); ++j)
      out.data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][feature_idx[j]];
    out.data.time[i] = rows[i][time_idx];
    out.data.event[i] = rows[i][event_idx] != 0.0 ? 1 : 0;
  }
  out.meta.n_used = n;
  out.meta.n_events = out.data.n_events();
  out.meta.n_censored = out.meta.n_used - out.meta.n_events;
  out.meta.n_features = feature_idx.size();
  return out;
}

ColumnCodec numeric(const std::string& name) { return {name, 'n', {}, {}}; }

ColumnCodec categorical(const std::string& name,
                        std::vector<std::string> levels,
                        std::vector<double> codes) {
  return {name, 'c', std::move(levels), std::move(codes)};
}

}  // namespace

LoadedDataset load_gbcsg2(const std::string& path) {
  Schema s;
  s.dataset_name = "gbcsg2";
  s.columns = {
      categorical("horTh", {"no", "yes"}, {0, 1}),
      numeric("age"),
      categorical("menostat", {"Pre", "Post"}, {0, 1}),
      numeric("tsize"),
      categorical("tgrade", {"I", "II", "III"}, {1, 2, 3}),
      numeric("pnodes"),
      numeric("progrec"),
      numeric("estrec"),
      numeric("time"),
      numeric("cens"),
  };
  s.time_column = "time";
  s.event_column = "cens";
  return load_with_schema(path, s);
}

LoadedDataset load_pbc(const std::string& path) {
  Schema s;
  s.dataset_name = "pbc";
  s.columns = {
      numeric("id"),
      numeric("trt"),
      numeric("age"),
      categorical("sex", {"m", "f"}, {0, 1}),
      numeric("ascites"),
      numeric("hepato"),
      numeric("spiders"),
      numeric("edema"),
      numeric("bili"),
      numeric("chol"),
      numeric("albumin"),
      numeric("copper"),
      numeric("alk_phos"),
      numeric("ast"),
      numeric("platelet"),
      numeric("protime"),
      numeric("stage"),
      numeric("time"),
      numeric("status"),
  };
  s.time_column = "time";
  s.event_column = "status";
  return load_with_schema(path, s);
}

LoadedDataset load_dataset(const std::string& name,
                           const std::string& data_dir) {
  const std::string path = data_dir + "/" + name + ".csv";
  if (name == "gbcsg2") return load_gbcsg2(path);
  if (name == "pbc") return load_pbc(path);
  throw input_error("unknown dataset '" + name + "' (expected pbc or gbcsg2)");
}

namespace {

// Indices of events and censored rows, each shuffled with its own stream so
// the assignment is stable under changes elsewhere.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
shuffled_strata(const SurvivalDataset& d, std::uint64_t seed) {
  std::vector<std::size_t> ev, ce;
  for (std::size_t i = 0; i < d.n(); ++i)
    (d.event[i] ? ev : ce).push_back(i);
  Rng rng_ev(derive_seed(seed, 0));
  Rng rng_ce(derive_seed(seed, 1));
  rng_ev.shuffle(ev);
  rng_ce.shuffle(ce);
  return {std::move(ev), std::move(ce)};
}

}  // namespace

TrainTestSplit split_train_test(const SurvivalDataset& d, double test_fraction,
                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw input_error("test fraction must be in (0, 1)");
  auto [ev, ce] = shuffled_strata(d, seed);
  const auto take = [&](std::size_t m) {
    return static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(m)));
  };
  const std::size_t ev_test = take(ev.size());
  const std::size_t ce_test = take(ce.size());

  TrainTestSplit split;
  split.test_rows.insert(split.test_rows.end(), ev.begin(),
                         ev.begin() + static_cast<std::ptrdiff_t>(ev_test));
  split.test_rows.insert(split.test_rows.end(), ce.begin(),
                         ce.begin() + static_cast<std::ptrdiff_t>(ce_test));
  split.train_rows.insert(split.train_rows.end(),
                          ev.begin() + static_cast<std::ptrdiff_t>(ev_test),
                          ev.end());
  split.train_rows.insert(split.train_rows.end(),
                          ce.begin() + static_cast<std::ptrdiff_t>(ce_test),
                          ce.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  std::sort(split.train_rows.begin(), split.train_rows.end());
  if (split.train_rows.empty() || split.test_rows.empty())
    throw input_error("degenerate train/test split");
  return split;
}

std::vector<Fold> make_folds(const SurvivalDataset& d, std::size_t k,
                             std::uint64_t seed) {
  if (k < 2) throw input_error("cross-validation needs at least 2 folds");
  if (k > d.n()) throw input_error("more folds than samples");
  auto [ev, ce] = shuffled_strata(d, seed);

  // Round-robin deal, events first: per-fold event counts differ by <= 1.
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < ev.size(); ++i) members[i % k].push_back(ev[i]);
  for (std::size_t i = 0; i < ce.size(); ++i)
    members[(ev.size() + i) % k].push_back(ce[i]);

  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    folds[f].valid_rows = members[f];
    std::sort(folds[f].valid_rows.begin(), folds[f].valid_rows.end());
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      folds[f].train_rows.insert(folds[f].train_rows.end(),
                                 members[g].begin(), members[g].end());
    }
    std::sort(folds[f].train_rows.begin(), folds[f].train_rows.end());
  }
  return folds;
}

void Standardizer::fit(const SurvivalDataset& train) {
  const Eigen::Index n = train.x.rows();
  const Eigen::Index p = train.x.cols();
  if (n < 2) throw input_error("standardizer needs at least 2 rows");
  mean = train.x.colwise().mean();
  scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double ss = (train.x.col(j).array() - mean(j)).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    scale(j) = sd > 1e-12 ? sd : 1.0;
  }
}

void Standardizer::apply(SurvivalDataset& d) const {
  if (d.x.cols() != mean.size())
    throw input_error("standardizer dimension mismatch");
  d.x = (d.x.rowwise() - mean.transpose()).array().rowwise() /
        scale.transpose().array();
}

}  // namespace hazard
