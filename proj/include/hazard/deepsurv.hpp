#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hazard/types.hpp"

namespace hazard {

// Risk sets for the partial-likelihood loss: for every event subject i,
// R(Y_i) = { j : Y_j >= Y_i } (tied times are mutually at risk). The sorted
// order and group boundaries power the O(n) loss sweep; the explicit lists
// state the contract and feed the tests.
struct RiskSetIndex {
  std::size_t n_events = 0;
  std::vector<std::size_t> event_subjects;           // time-ascending
  std::vector<std::vector<std::size_t>> risk_sets;   // parallel to event_subjects
  std::vector<std::size_t> order;                    // all subjects, time-ascending
  std::vector<std::size_t> group_begin;              // tied-time groups over `order`
  std::vector<std::size_t> group_end;
};

RiskSetIndex build_risk_sets(const std::vector<double>& times,
                             const std::vector<std::uint8_t>& events);

enum class Activation { relu, tanh };

struct DeepSurvOptions {
  std::vector<std::size_t> hidden_sizes = {16};
  Activation activation = Activation::relu;
  double learning_rate = 1e-3;
  std::size_t epochs = 500;
  double l2_lambda = 1e-4;   // on weights only, not biases
  double momentum = 0.9;     // 0 = plain gradient descent
  std::uint64_t init_seed = 0;
};

struct DeepSurvLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

struct DeepSurvTrainStats {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
};

class DeepSurvModel {
 public:
  // Full-batch gradient descent on the regularized negative partial
  // log-likelihood; deterministic given init_seed. Weights start uniform
  // with fan-in scaling, biases at zero.
  static DeepSurvModel fit(const SurvivalDataset& train,
                           const DeepSurvOptions& options);

  double predict_risk(const Eigen::VectorXd& features) const;
  std::vector<double> predict_risk(const SurvivalDataset& data) const;
  // Batch forward pass (rows = subjects).
  Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;

  const std::vector<DeepSurvLayer>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  double l2_lambda() const { return l2_lambda_; }
  const DeepSurvTrainStats& train_stats() const { return stats_; }
  std::uint64_t init_seed() const { return init_seed_; }

  DeepSurvModel() = default;
  DeepSurvModel(std::vector<DeepSurvLayer> layers, Activation activation,
                double l2_lambda, std::uint64_t init_seed);

  void set_train_stats(const DeepSurvTrainStats& stats) { stats_ = stats; }

 private:
  std::vector<DeepSurvLayer> layers_;
  Activation activation_ = Activation::relu;
  double l2_lambda_ = 0.0;
  std::uint64_t init_seed_ = 0;
  DeepSurvTrainStats stats_;
};

struct DeepSurvGradients {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
};

// Loss: -(1/N) sum over events of (r_i - log sum_{R(Y_i)} e^r) plus
// l2_lambda * ||W||^2, with log-sum-exp stabilization; gradients by
// reverse accumulation. The batch must be the full training set the risk
// sets were built from.
DeepSurvGradients deepsurv_loss_and_gradients(const DeepSurvModel& model,
                                              const SurvivalDataset& batch,
                                              const RiskSetIndex& risk_sets);

}  // namespace hazard
