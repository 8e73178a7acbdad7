#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hazard/forest.hpp"
#include "hazard/types.hpp"

namespace hazard {

struct BoostingOptions {
  std::size_t n_stages = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  std::size_t min_leaf_size = 10;
  double subsample = 1.0;  // per-stage row fraction, drawn without replacement
};

// Stagewise additive model on the log-risk scale with the negative Cox
// partial log-likelihood as loss: each stage fits a least-squares regression
// tree to the current score vector (the loss's negative gradient in F-space)
// and adds it scaled by the learning rate.
class BoostedCoxModel {
 public:
  static BoostedCoxModel fit(const SurvivalDataset& train,
                             const BoostingOptions& options,
                             std::uint64_t seed = 0);

  double predict_risk(const Eigen::VectorXd& features) const;
  std::vector<double> predict_risk(const SurvivalDataset& data) const;
  // Evaluation truncated to the first `stages` trees.
  double predict_risk_staged(const Eigen::VectorXd& features,
                             std::size_t stages) const;

  const std::vector<RegressionTree>& stages() const { return stages_; }
  double learning_rate() const { return learning_rate_; }
  // Training loss (negative partial log-likelihood): entry 0 is the loss at
  // F = 0, entry t the loss after t stages.
  const std::vector<double>& stage_losses() const { return stage_losses_; }

  BoostedCoxModel() = default;
  BoostedCoxModel(std::vector<RegressionTree> stages, double learning_rate,
                  std::vector<double> stage_losses)
      : stages_(std::move(stages)), learning_rate_(learning_rate),
        stage_losses_(std::move(stage_losses)) {}

 private:
  std::vector<RegressionTree> stages_;
  double learning_rate_ = 0.1;
  std::vector<double> stage_losses_;
};

}  // namespace hazard
