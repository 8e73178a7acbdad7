#include "hazard/tuning.hpp"

#include <cmath>
#include <exception>

#include "hazard/dataset.hpp"
#include "hazard/error.hpp"
#include "hazard/metrics.hpp"
#include "hazard/models.hpp"

namespace hazard {

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.next_uniform(std::log(lo), std::log(hi)));
}

template <typename T>
T pick(Rng& rng, const std::vector<T>& choices) {
  return choices[static_cast<std::size_t>(rng.next_below(choices.size()))];
}

}  // namespace

bool has_search_space(const std::string& tag) {
  if (!is_model_tag(tag)) throw input_error("unknown model tag: '" + tag + "'");
  return tag != "weibull" && tag != "deepsurv_linear";
}

nlohmann::json sample_config(const std::string& tag, std::size_t n_features,
                             Rng& rng) {
  if (tag == "cox") return {{"ridge", log_uniform(rng, 1e-6, 1.0)}};
  if (tag == "aalen") return {{"ridge_rel", log_uniform(rng, 1e-8, 1e-2)}};
  if (tag == "rsf" || tag == "rsf_ann") {
    if (n_features == 0) throw input_error("sample_config: n_features must be >= 1");
    return {{"n_trees", pick<int>(rng, {100, 200, 500})},
            {"mtry", 1 + static_cast<int>(rng.next_below(n_features))},
            {"min_leaf_size", pick<int>(rng, {3, 5, 10, 20})},
            {"max_depth", pick<int>(rng, {0, 3, 5, 8})}};
  }
  if (tag == "gbcox") {
    return {{"n_stages", 50 + static_cast<int>(rng.next_below(451))},
            {"learning_rate", log_uniform(rng, 0.01, 0.3)},
            {"max_depth", 1 + static_cast<int>(rng.next_below(4))},
            {"min_leaf_size", 10},
            {"subsample", pick<double>(rng, {0.5, 0.8, 1.0})}};
  }
  if (tag == "deepsurv") {
    const std::vector<std::vector<int>> hiddens = {{8}, {16}, {32}, {16, 16}};
    return {{"hidden", pick(rng, hiddens)},
            {"activation", "relu"},
            {"learning_rate", log_uniform(rng, 1e-4, 1e-2)},
            {"l2", log_uniform(rng, 1e-5, 1e-1)},
            {"epochs", pick<int>(rng, {200, 500, 1000})}};
  }
  throw input_error("no search space for model '" + tag + "'");
}

SearchResult random_search(const std::string& tag, const SurvivalDataset& train,
                           std::size_t budget, std::size_t n_folds,
                           std::uint64_t seed) {
  if (!has_search_space(tag))
    throw input_error("no search space for model '" + tag + "'");
  if (budget == 0) throw input_error("random_search: budget must be >= 1");
  if (n_folds < 2) throw input_error("random_search: need at least 2 folds");

  SearchResult result;
  result.model = tag;
  result.seed = seed;
  result.budget = budget;
  result.folds = n_folds;

  // All configurations are drawn up front from their own stream, so the
  // candidate list depends only on (tag, p, budget, seed).
  Rng config_rng(derive_seed(seed, 0));
  result.trials.resize(budget);
  for (std::size_t t = 0; t < budget; ++t)
    result.trials[t].config = sample_config(tag, train.p(), config_rng);

  const std::vector<Fold> folds = make_folds(train, n_folds, derive_seed(seed, 1));

  bool any_ok = false;
  for (std::size_t t = 0; t < budget; ++t) {
    SearchTrial& trial = result.trials[t];
    double total = 0.0;
    try {
      for (std::size_t f = 0; f < folds.size(); ++f) {
        const SurvivalDataset fit_part = train.subset(folds[f].train_rows);
        const SurvivalDataset val_part = train.subset(folds[f].valid_rows);
        const std::uint64_t model_seed =
            derive_seed(seed, 2 + t * folds.size() + f);
        AnyModel model = AnyModel::fit(tag, trial.config, fit_part, model_seed);
        const std::vector<double> risks = model.predict_risk(val_part);
        const double c =
            concordance_index(val_part.time, val_part.event, risks).index;
        trial.fold_scores.push_back(c);
        total += c;
      }
      trial.mean_score = total / static_cast<double>(folds.size());
      if (!std::isfinite(trial.mean_score))
        throw convergence_error("non-finite validation score");
      any_ok = true;
    } catch (const std::exception& e) {
      trial.failed = true;
      trial.error = e.what();
      trial.fold_scores.clear();
      trial.mean_score = std::numeric_limits<double>::quiet_NaN();
    }
  }

  if (!any_ok)
    throw convergence_error("random_search(" + tag +
                            "): every configuration failed");

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < budget; ++t) {
    const SearchTrial& trial = result.trials[t];
    if (!trial.failed && trial.mean_score > best_score) {
      best_score = trial.mean_score;
      best = t;
    }
  }
  result.best_index = best;
  result.best_config = result.trials[best].config;
  result.best_score = best_score;
  return result;
}

}  // namespace hazard
