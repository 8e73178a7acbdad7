#include "hazard/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hazard/error.hpp"
#include "hazard/metrics.hpp"
#include "hazard/rng.hpp"

namespace hazard {

double logrank_statistic(const std::vector<double>& times_a,
                         const std::vector<std::uint8_t>& events_a,
                         const std::vector<double>& times_b,
                         const std::vector<std::uint8_t>& events_b) {
  if (times_a.empty() || times_b.empty())
    throw input_error("logrank: empty group");
  struct Entry {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Entry> pool;
  pool.reserve(times_a.size() + times_b.size());
  for (std::size_t i = 0; i < times_a.size(); ++i)
    pool.push_back({times_a[i], events_a[i] != 0, true});
  for (std::size_t i = 0; i < times_b.size(); ++i)
    pool.push_back({times_b[i], events_b[i] != 0, false});
  std::sort(pool.begin(), pool.end(),
            [](const Entry& a, const Entry& b) { return a.time < b.time; });

  double observed_minus_expected = 0.0;
  double variance = 0.0;
  std::size_t at_risk = pool.size();
  std::size_t at_risk_a = times_a.size();
  std::size_t g = 0;
  while (g < pool.size()) {
    std::size_t e = g;
    std::size_t deaths = 0, deaths_a = 0;
    while (e < pool.size() && pool[e].time == pool[g].time) {
      deaths += pool[e].event;
      deaths_a += pool[e].event && pool[e].in_a;
      ++e;
    }
    if (deaths > 0) {
      const double n = static_cast<double>(at_risk);
      const double na = static_cast<double>(at_risk_a);
      const double d = static_cast<double>(deaths);
      observed_minus_expected += static_cast<double>(deaths_a) - d * na / n;
      if (at_risk > 1)
        variance += d * (na / n) * (1.0 - na / n) * (n - d) / (n - 1.0);
    }
    for (std::size_t k = g; k < e; ++k) at_risk_a -= pool[k].in_a;
    at_risk -= e - g;
    g = e;
  }
  if (variance <= 0.0) return 0.0;
  return std::abs(observed_minus_expected) / std::sqrt(variance);
}

namespace {

// Per-node split state, shared across candidate features. Built once per
// node from the in-node (time, event) multiset.
//
// The split statistic is computed incrementally while samples move into the
// left group in feature order, using two identities over the node's event
// times t_k (with d_k deaths and n_k at risk within the node):
//   O-E       = sum over left samples of a_i,
//                 a_i = delta_i - sum_{t_k <= Y_i} d_k / n_k
//   variance  = sum_k c_k nl_k (n_k - nl_k),
//                 c_k = d_k (n_k - d_k) / ((n_k - 1) n_k^2)
// where nl_k counts left samples with Y_i >= t_k. The first is a running
// scalar; the second unfolds into prefix sums over pairs of samples and is
// maintained with two Fenwick trees keyed by each sample's event-time index.
struct NodeSplitContext {
  std::size_t m = 0;                   // samples in node
  std::size_t n_events = 0;
  std::size_t n_event_times = 0;       // K
  std::vector<std::size_t> k_of;       // per member: index of last event time <= Y, 0 if none (1-based)
  std::vector<double> score;           // per member: a_i
  std::vector<double> prefix_c;        // P0[k] = sum_{kappa<=k} c_kappa (1-based)
  std::vector<double> prefix_cn;       // P1[k] = sum c_kappa * n_kappa
  // Fenwick trees over event-time index 1..K: count of inserted members and
  // sum of P0[k_of] of inserted members.
  std::vector<double> fen_count;
  std::vector<double> fen_p0;

  void build(const std::vector<double>& time, const std::vector<std::uint8_t>& event,
             const std::vector<std::size_t>& members,
             std::vector<double>& tmp_times, std::vector<std::uint8_t>& tmp_events,
             std::vector<std::size_t>& tmp_order) {
    m = members.size();
    tmp_times.resize(m);
    tmp_events.resize(m);
    tmp_order.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      tmp_times[i] = time[members[i]];
      tmp_events[i] = event[members[i]];
    }
    std::iota(tmp_order.begin(), tmp_order.end(), 0);
    std::sort(tmp_order.begin(), tmp_order.end(), [&](std::size_t a, std::size_t b) {
      return tmp_times[a] < tmp_times[b];
    });

    k_of.assign(m, 0);
    score.assign(m, 0.0);
    prefix_c.assign(1, 0.0);
    prefix_cn.assign(1, 0.0);
    n_events = 0;
    n_event_times = 0;

    double cum_dn = 0.0;  // sum d_k / n_k so far
    std::size_t at_risk = m;
    std::size_t g = 0;
    while (g < m) {
      std::size_t e = g;
      std::size_t deaths = 0;
      while (e < m && tmp_times[tmp_order[e]] == tmp_times[tmp_order[g]]) {
        deaths += tmp_events[tmp_order[e]];
        ++e;
      }
      if (deaths > 0) {
        ++n_event_times;
        const double n = static_cast<double>(at_risk);
        const double d = static_cast<double>(deaths);
        cum_dn += d / n;
        const double c =
            at_risk > 1 ? d * (n - d) / ((n - 1.0) * n * n) : 0.0;
        prefix_c.push_back(prefix_c.back() + c);
        prefix_cn.push_back(prefix_cn.back() + c * n);
        n_events += deaths;
      }
      for (std::size_t k = g; k < e; ++k) {
        const std::size_t i = tmp_order[k];
        k_of[i] = n_event_times;
        score[i] = (tmp_events[i] ? 1.0 : 0.0) - cum_dn;
      }
      at_risk -= e - g;
      g = e;
    }
    fen_count.assign(n_event_times + 1, 0.0);
    fen_p0.assign(n_event_times + 1, 0.0);
  }

  void fenwick_reset() {
    std::fill(fen_count.begin(), fen_count.end(), 0.0);
    std::fill(fen_p0.begin(), fen_p0.end(), 0.0);
  }
  void fenwick_add(std::size_t k, double p0) {
    for (std::size_t i = k; i < fen_count.size(); i += i & (~i + 1)) {
      fen_count[i] += 1.0;
      fen_p0[i] += p0;
    }
  }
  void fenwick_prefix(std::size_t k, double& count, double& p0_sum) const {
    count = 0.0;
    p0_sum = 0.0;
    for (std::size_t i = k; i > 0; i -= i & (~i + 1)) {
      count += fen_count[i];
      p0_sum += fen_p0[i];
    }
  }
};

// Incremental left-group accumulator over a NodeSplitContext.
struct LeftGroup {
  NodeSplitContext* ctx = nullptr;
  double sum_score = 0.0;   // O-E for the left group
  double part1 = 0.0;       // sum P1[k_i]
  double pair_sum = 0.0;    // sum over unordered pairs of P0[min(k_i,k_j)]
  double self_sum = 0.0;    // sum P0[k_i]
  std::size_t count = 0;
  std::size_t event_count = 0;

  void reset(NodeSplitContext& c) {
    ctx = &c;
    ctx->fenwick_reset();
    sum_score = part1 = pair_sum = self_sum = 0.0;
    count = event_count = 0;
  }

  void add(std::size_t member_local, bool is_event) {
    const std::size_t k = ctx->k_of[member_local];
    const double p0_k = ctx->prefix_c[k];
    if (count > 0) {
      double cnt_le = 0.0, p0_le = 0.0;
      ctx->fenwick_prefix(k, cnt_le, p0_le);
      // pairs with k_j <= k contribute P0[k_j]; the rest contribute P0[k].
      pair_sum += p0_le + (static_cast<double>(count) - cnt_le) * p0_k;
    }
    // k == 0 samples exit before the first event time; P0 is 0 there, so
    // storing them at index 1 with weight 0 keeps every pair sum exact.
    ctx->fenwick_add(k > 0 ? k : 1, p0_k);
    self_sum += p0_k;
    part1 += ctx->prefix_cn[k];
    sum_score += ctx->score[member_local];
    ++count;
    event_count += is_event ? 1 : 0;
  }

  // Squared standardized log-rank statistic of the current left group
  // against the rest of the node; -1 when the variance vanishes.
  double stat_squared() const {
    const double variance = part1 - (2.0 * pair_sum + self_sum);
    if (variance <= 1e-12) return -1.0;
    return sum_score * sum_score / variance;
  }
};

struct BestSplit {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double stat_squared = -1.0;
};

}  // namespace

SurvivalTree SurvivalTree::grow(const SurvivalDataset& data,
                                const std::vector<std::size_t>& rows,
                                const ForestOptions& options,
                                std::uint64_t seed) {
  const std::size_t p = data.p();
  if (rows.empty()) throw input_error("survival tree: empty sample");
  std::size_t total_events = 0;
  for (auto r : rows) total_events += data.event[r];
  if (total_events == 0) throw input_error("survival tree: no events in sample");

  const std::size_t mtry =
      options.mtry > 0
          ? std::min(options.mtry, p)
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));

  Rng rng(seed);
  std::vector<TreeNode> nodes;

  // Reused buffers across nodes.
  NodeSplitContext ctx;
  LeftGroup left;
  std::vector<double> tmp_times;
  std::vector<std::uint8_t> tmp_events;
  std::vector<std::size_t> tmp_order, feat_order;
  std::vector<double> feat_values;

  // Recursive growth; explicit lambda recursion keeps the traversal order
  // (and with it the RNG stream) deterministic: node first, then left, right.
  auto grow_node = [&](auto&& self, std::vector<std::size_t> members,
                       std::size_t depth) -> int {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    std::size_t node_events = 0;
    for (auto r : members) node_events += data.event[r];

    const bool depth_ok = options.max_depth == 0 || depth < options.max_depth;
    BestSplit best;

    if (depth_ok && node_events > 0 && members.size() >= 2 * options.min_leaf_size) {
      ctx.build(data.time, data.event, members, tmp_times, tmp_events, tmp_order);

      std::vector<std::size_t> candidates = rng.sample_without_replacement(p, mtry);
      std::sort(candidates.begin(), candidates.end());

      const std::size_t m = members.size();
      feat_order.resize(m);
      feat_values.resize(m);
      for (std::size_t f : candidates) {
        for (std::size_t i = 0; i < m; ++i)
          feat_values[i] = data.x(static_cast<Eigen::Index>(members[i]),
                                  static_cast<Eigen::Index>(f));
        std::iota(feat_order.begin(), feat_order.end(), std::size_t{0});
        std::sort(feat_order.begin(), feat_order.end(),
                  [&](std::size_t a, std::size_t b) {
                    if (feat_values[a] != feat_values[b])
                      return feat_values[a] < feat_values[b];
                    return a < b;
                  });
        if (feat_values[feat_order.front()] == feat_values[feat_order.back()])
          continue;  // constant feature in node

        left.reset(ctx);
        std::size_t i = 0;
        while (i < m) {
          // Move the whole block of equal values into the left group.
          const double v = feat_values[feat_order[i]];
          while (i < m && feat_values[feat_order[i]] == v) {
            const std::size_t local = feat_order[i];
            left.add(local, tmp_events[local] != 0);
            ++i;
          }
          if (i >= m) break;  // all samples left: no boundary
          const std::size_t right_count = m - left.count;
          const std::size_t right_events = node_events - left.event_count;
          if (left.count < options.min_leaf_size ||
              right_count < options.min_leaf_size ||
              left.event_count == 0 || right_events == 0)
            continue;
          const double next_v = feat_values[feat_order[i]];
          double threshold = v + 0.5 * (next_v - v);
          if (threshold >= next_v) threshold = v;  // fp guard for adjacent values
          const double s2 = left.stat_squared();
          if (s2 > best.stat_squared) {
            best.found = true;
            best.feature = f;
            best.threshold = threshold;
            best.stat_squared = s2;
          }
        }
      }
    }

    if (!best.found) {
      TreeNode& leaf = nodes[static_cast<std::size_t>(node_id)];
      leaf.samples = std::move(members);
      std::vector<double> lt(leaf.samples.size());
      std::vector<std::uint8_t> le(leaf.samples.size());
      for (std::size_t i = 0; i < leaf.samples.size(); ++i) {
        lt[i] = data.time[leaf.samples[i]];
        le[i] = data.event[leaf.samples[i]];
      }
      leaf.chf = nelson_aalen(lt, le);
      leaf.km = kaplan_meier(lt, le);
      return node_id;
    }

    std::vector<std::size_t> left_members, right_members;
    left_members.reserve(members.size());
    right_members.reserve(members.size());
    for (auto r : members) {
      const double v = data.x(static_cast<Eigen::Index>(r),
                              static_cast<Eigen::Index>(best.feature));
      (v <= best.threshold ? left_members : right_members).push_back(r);
    }
    members.clear();
    members.shrink_to_fit();

    nodes[static_cast<std::size_t>(node_id)].feature = static_cast<int>(best.feature);
    nodes[static_cast<std::size_t>(node_id)].threshold = best.threshold;
    const int left_id = self(self, std::move(left_members), depth + 1);
    nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = self(self, std::move(right_members), depth + 1);
    nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  };

  grow_node(grow_node, rows, 0);
  return SurvivalTree(std::move(nodes), seed);
}

std::size_t SurvivalTree::leaf_index(const Eigen::VectorXd& features) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const double v = features(nodes_[i].feature);
    i = static_cast<std::size_t>(v <= nodes_[i].threshold ? nodes_[i].left
                                                          : nodes_[i].right);
  }
  return i;
}

void SurvivalTree::cache_leaf_scalars(const std::vector<double>& grid, double tau) {
  for (TreeNode& node : nodes_) {
    if (node.feature >= 0) continue;
    // Sum of the leaf CHF over the grid times: one merge pass, since both
    // the grid and the knots are ascending.
    double mortality = 0.0;
    const auto& knots = node.chf.knots();
    const auto& values = node.chf.values();
    std::size_t k = 0;
    double current = 0.0;
    for (double t : grid) {
      while (k < knots.size() && knots[k] <= t) current = values[k++];
      mortality += current;
    }
    node.mortality = mortality;
    node.km_area = node.km.integrate(tau);
  }
}

SurvivalForest SurvivalForest::fit(const SurvivalDataset& train,
                                   const ForestOptions& options,
                                   std::uint64_t master_seed) {
  if (options.n_trees == 0) throw input_error("forest: n_trees must be >= 1");
  if (options.mtry > train.p()) throw input_error("forest: mtry exceeds feature count");
  const std::size_t n = train.n();

  // Evaluation grid: distinct training event times; horizon: the last one.
  std::vector<double> grid;
  for (std::size_t i = 0; i < n; ++i)
    if (train.event[i]) grid.push_back(train.time[i]);
  if (grid.empty()) throw input_error("forest: no events in training data");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const double tau = grid.back();

  std::vector<SurvivalTree> trees;
  trees.reserve(options.n_trees);
  std::size_t dropped = 0;
  for (std::size_t t = 0; t < options.n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(master_seed, t);
    Rng boot_rng(derive_seed(tree_seed, 0));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = static_cast<std::size_t>(boot_rng.next_below(n));
    try {
      SurvivalTree tree =
          SurvivalTree::grow(train, rows, options, derive_seed(tree_seed, 1));
      tree.cache_leaf_scalars(grid, tau);
      trees.push_back(std::move(tree));
    } catch (const input_error&) {
      ++dropped;
    }
  }
  if (trees.empty())
    throw input_error("forest: every bootstrap tree failed to grow");
  return SurvivalForest(std::move(trees), options, master_seed,
                        std::move(grid), tau, dropped);
}

double SurvivalForest::predict_risk(const Eigen::VectorXd& features) const {
  double acc = 0.0;
  for (const auto& tree : trees_) {
    const TreeNode& leaf = tree.nodes()[tree.leaf_index(features)];
    acc += options_.variant == ForestVariant::ensemble_chf ? leaf.mortality
                                                           : leaf.km_area;
  }
  if (options_.variant == ForestVariant::ensemble_chf) return acc;
  // Adaptive nearest neighbors: the averaged KM curve's restricted area,
  // negated so higher = riskier. Averaging curves commutes with the area.
  return -acc / static_cast<double>(trees_.size());
}

std::vector<double> SurvivalForest::predict_risk(const SurvivalDataset& data) const {
  std::vector<double> out(data.n());
  for (std::size_t i = 0; i < data.n(); ++i)
    out[i] = predict_risk(data.x.row(static_cast<Eigen::Index>(i)).transpose());
  return out;
}

RegressionTree RegressionTree::grow(const Eigen::MatrixXd& x,
                                    const std::vector<double>& targets,
                                    const std::vector<std::size_t>& rows,
                                    const RegressionTreeOptions& options,
                                    std::uint64_t seed) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  if (rows.empty()) throw input_error("regression tree: empty sample");
  const std::size_t mtry = options.mtry > 0 ? std::min(options.mtry, p) : p;

  Rng rng(seed);
  std::vector<TreeNode> nodes;
  std::vector<double> leaf_values;

  std::vector<std::size_t> feat_order;
  std::vector<double> feat_values, feat_targets;

  auto grow_node = [&](auto&& self, std::vector<std::size_t> members,
                       std::size_t depth) -> int {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    leaf_values.push_back(0.0);

    double sum = 0.0;
    for (auto r : members) sum += targets[r];
    const std::size_t m = members.size();

    const bool depth_ok = options.max_depth == 0 || depth < options.max_depth;
    bool found = false;
    std::size_t best_feature = 0;
    double best_threshold = 0.0, best_gain = -1.0;

    if (depth_ok && m >= 2 * options.min_leaf_size) {
      std::vector<std::size_t> candidates = rng.sample_without_replacement(p, mtry);
      std::sort(candidates.begin(), candidates.end());
      feat_order.resize(m);
      feat_values.resize(m);
      feat_targets.resize(m);
      for (std::size_t f : candidates) {
        for (std::size_t i = 0; i < m; ++i)
          feat_values[i] = x(static_cast<Eigen::Index>(members[i]),
                             static_cast<Eigen::Index>(f));
        std::iota(feat_order.begin(), feat_order.end(), std::size_t{0});
        std::sort(feat_order.begin(), feat_order.end(),
                  [&](std::size_t a, std::size_t b) {
                    if (feat_values[a] != feat_values[b])
                      return feat_values[a] < feat_values[b];
                    return a < b;
                  });
        if (feat_values[feat_order.front()] == feat_values[feat_order.back()])
          continue;

        // Gain = S_L^2/n_L + S_R^2/n_R (total SSE drop up to a constant).
        double left_sum = 0.0;
        std::size_t left_count = 0;
        std::size_t i = 0;
        while (i < m) {
          const double v = feat_values[feat_order[i]];
          while (i < m && feat_values[feat_order[i]] == v) {
            left_sum += targets[members[feat_order[i]]];
            ++left_count;
            ++i;
          }
          if (i >= m) break;
          const std::size_t right_count = m - left_count;
          if (left_count < options.min_leaf_size ||
              right_count < options.min_leaf_size)
            continue;
          const double right_sum = sum - left_sum;
          const double gain =
              left_sum * left_sum / static_cast<double>(left_count) +
              right_sum * right_sum / static_cast<double>(right_count);
          if (gain > best_gain) {
            const double next_v = feat_values[feat_order[i]];
            double threshold = v + 0.5 * (next_v - v);
            if (threshold >= next_v) threshold = v;
            found = true;
            best_feature = f;
            best_threshold = threshold;
            best_gain = gain;
          }
        }
      }
    }

    if (!found) {
      leaf_values[static_cast<std::size_t>(node_id)] =
          sum / static_cast<double>(m);
      return node_id;
    }

    std::vector<std::size_t> left_members, right_members;
    for (auto r : members) {
      const double v = x(static_cast<Eigen::Index>(r),
                         static_cast<Eigen::Index>(best_feature));
      (v <= best_threshold ? left_members : right_members).push_back(r);
    }
    nodes[static_cast<std::size_t>(node_id)].feature = static_cast<int>(best_feature);
    nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
    const int left_id = self(self, std::move(left_members), depth + 1);
    nodes[static_cast<std::size_t>(node_id)].left = left_id;
    const int right_id = self(self, std::move(right_members), depth + 1);
    nodes[static_cast<std::size_t>(node_id)].right = right_id;
    return node_id;
  };

  grow_node(grow_node, rows, 0);
  return RegressionTree(std::move(nodes), std::move(leaf_values));
}

double RegressionTree::predict(const Eigen::VectorXd& features) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const double v = features(nodes_[i].feature);
    i = static_cast<std::size_t>(v <= nodes_[i].threshold ? nodes_[i].left
                                                          : nodes_[i].right);
  }
  return leaf_values_[i];
}

}  // namespace hazard
