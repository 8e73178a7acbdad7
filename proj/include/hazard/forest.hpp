#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hazard/step_function.hpp"
#include "hazard/types.hpp"

namespace hazard {

enum class ForestVariant {
  ensemble_chf,     // risk = aggregated Nelson-Aalen mortality
  adaptive_nn_km,   // risk = negative restricted area under averaged KM curve
};

struct ForestOptions {
  std::size_t n_trees = 200;
  std::size_t mtry = 0;           // candidate features per node; 0 = ceil(sqrt(p))
  std::size_t min_leaf_size = 10;
  std::size_t max_depth = 0;      // 0 = unlimited
  ForestVariant variant = ForestVariant::ensemble_chf;
};

// Two-sample log-rank: |observed - expected| events over the pooled event
// times, normalized by the square root of the hypergeometric variance.
// Returns 0 when the variance is 0 (no usable events).
double logrank_statistic(const std::vector<double>& times_a,
                         const std::vector<std::uint8_t>& events_a,
                         const std::vector<double>& times_b,
                         const std::vector<std::uint8_t>& events_b);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaf payload. Scalars are cached at fit time against the forest-level
  // evaluation grid so prediction is one lookup per tree.
  std::vector<std::size_t> samples;  // training rows routed here (bootstrap)
  StepFunction chf;                  // Nelson-Aalen over leaf samples
  StepFunction km;                   // Kaplan-Meier over leaf samples
  double mortality = 0.0;            // sum of chf over the forest time grid
  double km_area = 0.0;              // integral of km over [0, forest tau]
};

class SurvivalTree {
 public:
  // rows index into data (duplicates allowed: bootstrap draws). Splits
  // maximize the log-rank statistic over mtry candidate features and all
  // midpoints of consecutive distinct in-node values; ties break toward the
  // lower feature index, then the lower threshold. Eligible splits keep
  // min_leaf_size samples and at least one event on each side.
  static SurvivalTree grow(const SurvivalDataset& data,
                           const std::vector<std::size_t>& rows,
                           const ForestOptions& options, std::uint64_t seed);

  std::size_t leaf_index(const Eigen::VectorXd& features) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::uint64_t rng_seed() const { return seed_; }

  // Fills the cached leaf scalars for the given evaluation grid/horizon.
  void cache_leaf_scalars(const std::vector<double>& grid, double tau);

  SurvivalTree() = default;
  SurvivalTree(std::vector<TreeNode> nodes, std::uint64_t seed)
      : nodes_(std::move(nodes)), seed_(seed) {}

 private:
  std::vector<TreeNode> nodes_;
  std::uint64_t seed_ = 0;
};

class SurvivalForest {
 public:
  // Grows n_trees trees on bootstrap samples (with replacement, size n,
  // per-tree seed derived from master_seed). Trees whose bootstrap cannot
  // be grown are dropped and counted; only a total failure raises.
  static SurvivalForest fit(const SurvivalDataset& train,
                            const ForestOptions& options,
                            std::uint64_t master_seed);

  double predict_risk(const Eigen::VectorXd& features) const;
  std::vector<double> predict_risk(const SurvivalDataset& data) const;

  const std::vector<SurvivalTree>& trees() const { return trees_; }
  const ForestOptions& options() const { return options_; }
  std::uint64_t master_seed() const { return master_seed_; }
  std::size_t dropped_trees() const { return dropped_; }
  const std::vector<double>& event_grid() const { return grid_; }
  double horizon() const { return tau_; }

  SurvivalForest() = default;
  SurvivalForest(std::vector<SurvivalTree> trees, ForestOptions options,
                 std::uint64_t master_seed, std::vector<double> grid,
                 double tau, std::size_t dropped)
      : trees_(std::move(trees)), options_(options), master_seed_(master_seed),
        grid_(std::move(grid)), tau_(tau), dropped_(dropped) {}

 private:
  std::vector<SurvivalTree> trees_;
  ForestOptions options_;
  std::uint64_t master_seed_ = 0;
  std::vector<double> grid_;  // distinct training event times
  double tau_ = 0.0;          // last training event time
  std::size_t dropped_ = 0;
};

// Least-squares regression tree on the same node machinery, used by the
// boosting module: splits maximize variance reduction, leaves predict the
// mean target.
struct RegressionTreeOptions {
  std::size_t min_leaf_size = 5;
  std::size_t max_depth = 3;  // 0 = unlimited
  std::size_t mtry = 0;       // 0 = all features
};

class RegressionTree {
 public:
  static RegressionTree grow(const Eigen::MatrixXd& x,
                             const std::vector<double>& targets,
                             const std::vector<std::size_t>& rows,
                             const RegressionTreeOptions& options,
                             std::uint64_t seed);

  double predict(const Eigen::VectorXd& features) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& leaf_values() const { return leaf_values_; }

  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::vector<double> leaf_values)
      : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)) {}

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_values_;  // by node index; 0 for internal nodes
};

}  // namespace hazard
