#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "hazard/rng.hpp"
#include "hazard/types.hpp"

namespace hazard {

// One hyperparameter configuration evaluated by cross-validation. A trial
// whose fit or scoring throws on any fold is marked failed and excluded
// from the selection; its error text is kept for the report.
struct SearchTrial {
  nlohmann::json config;
  std::vector<double> fold_scores;
  double mean_score = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
};

struct SearchResult {
  std::string model;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t folds = 0;
  std::vector<SearchTrial> trials;
  std::size_t best_index = 0;
  nlohmann::json best_config;
  double best_score = 0.0;
};

// Models with a tuning space. weibull has no hyperparameters and
// deepsurv_linear is pinned by its role as a reference model, so neither
// is searchable.
bool has_search_space(const std::string& tag);

// One random draw from the tag's search space. n_features bounds the mtry
// draw for the forests; other tags ignore it.
nlohmann::json sample_config(const std::string& tag, std::size_t n_features,
                             Rng& rng);

// Random search over `budget` pre-drawn configurations, scored by mean
// validation concordance over event-stratified k-fold splits. The folds are
// identical for every configuration (paired comparison). Deterministic in
// (tag, train, budget, n_folds, seed). Ties in the mean score keep the
// earliest trial.
SearchResult random_search(const std::string& tag, const SurvivalDataset& train,
                           std::size_t budget, std::size_t n_folds,
                           std::uint64_t seed);

}  // namespace hazard
