#include "hazard/boosting.hpp"

#include <cmath>
#include <string>

#include "hazard/cox.hpp"
#include "hazard/error.hpp"
#include "hazard/rng.hpp"

namespace hazard {

BoostedCoxModel BoostedCoxModel::fit(const SurvivalDataset& train,
                                     const BoostingOptions& options,
                                     std::uint64_t seed) {
  const std::size_t n = train.n();
  if (train.n_events() < 2)
    throw input_error("boosting fit needs at least 2 events");
  if (!(options.learning_rate > 0.0 && options.learning_rate <= 1.0))
    throw input_error("boosting: learning rate must be in (0, 1]");
  if (!(options.subsample > 0.0 && options.subsample <= 1.0))
    throw input_error("boosting: subsample fraction must be in (0, 1]");

  RegressionTreeOptions tree_options;
  tree_options.min_leaf_size = options.min_leaf_size;
  tree_options.max_depth = options.max_depth;
  tree_options.mtry = 0;  // all features

  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<RegressionTree> stages;
  stages.reserve(options.n_stages);
  std::vector<double> losses;
  losses.reserve(options.n_stages + 1);

  std::vector<std::size_t> all_rows(n);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;
  const std::size_t subsample_count = std::max<std::size_t>(
      2 * options.min_leaf_size,
      static_cast<std::size_t>(options.subsample * static_cast<double>(n)));

  CoxEtaResult state = cox_loglik_eta(f, train.time, train.event);
  losses.push_back(-state.loglik);

  for (std::size_t t = 0; t < options.n_stages; ++t) {
    // The score vector is d loglik / d F, i.e. the negative gradient of the
    // loss: exactly the regression target for this stage.
    std::vector<double> residuals(state.score.data(),
                                  state.score.data() + state.score.size());

    std::vector<std::size_t> rows;
    if (options.subsample >= 1.0 || subsample_count >= n) {
      rows = all_rows;
    } else {
      Rng stage_rng(derive_seed(seed, t));
      rows = stage_rng.sample_without_replacement(n, subsample_count);
      std::sort(rows.begin(), rows.end());
    }

    RegressionTree tree = RegressionTree::grow(
        train.x, residuals, rows, tree_options, derive_seed(seed, options.n_stages + t));
    for (std::size_t i = 0; i < n; ++i)
      f(static_cast<Eigen::Index>(i)) +=
          options.learning_rate *
          tree.predict(train.x.row(static_cast<Eigen::Index>(i)).transpose());
    stages.push_back(std::move(tree));

    state = cox_loglik_eta(f, train.time, train.event);
    if (!std::isfinite(state.loglik))
      throw convergence_error("boosting: non-finite loss at stage " +
                              std::to_string(t + 1));
    losses.push_back(-state.loglik);
  }

  return BoostedCoxModel(std::move(stages), options.learning_rate,
                         std::move(losses));
}

double BoostedCoxModel::predict_risk(const Eigen::VectorXd& features) const {
  return predict_risk_staged(features, stages_.size());
}

double BoostedCoxModel::predict_risk_staged(const Eigen::VectorXd& features,
                                            std::size_t stages) const {
  if (stages > stages_.size())
    throw input_error("boosting: staged prediction beyond fitted stages");
  double f = 0.0;
  for (std::size_t t = 0; t < stages; ++t)
    f += learning_rate_ * stages_[t].predict(features);
  return f;
}

std::vector<double> BoostedCoxModel::predict_risk(
    const SurvivalDataset& data) const {
  std::vector<double> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i)
    out[i] =
        predict_risk(data.x.row(static_cast<Eigen::Index>(i)).transpose());
  return out;
}

}  // namespace hazard
