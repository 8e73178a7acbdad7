#include "hazard/deepsurv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hazard/error.hpp"
#include "hazard/rng.hpp"

namespace hazard {

RiskSetIndex build_risk_sets(const std::vector<double>& times,
                             const std::vector<std::uint8_t>& events) {
  const std::size_t n = times.size();
  if (n == 0 || events.size() != n)
    throw input_error("risk sets: empty input or length mismatch");
  RiskSetIndex rsi;
  rsi.order.resize(n);
  std::iota(rsi.order.begin(), rsi.order.end(), 0);
  std::sort(rsi.order.begin(), rsi.order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] < times[b];
  });
  std::size_t g = 0;
  while (g < n) {
    std::size_t e = g;
    while (e < n && times[rsi.order[e]] == times[rsi.order[g]]) ++e;
    rsi.group_begin.push_back(g);
    rsi.group_end.push_back(e);
    g = e;
  }
  for (std::size_t gi = 0; gi < rsi.group_begin.size(); ++gi) {
    for (std::size_t k = rsi.group_begin[gi]; k < rsi.group_end[gi]; ++k) {
      const std::size_t i = rsi.order[k];
      if (!events[i]) continue;
      rsi.event_subjects.push_back(i);
      // R(Y_i): everyone from this tied-time group onward.
      rsi.risk_sets.emplace_back(rsi.order.begin() +
                                     static_cast<std::ptrdiff_t>(rsi.group_begin[gi]),
                                 rsi.order.end());
    }
  }
  rsi.n_events = rsi.event_subjects.size();
  if (rsi.n_events == 0)
    throw input_error("risk sets: no events, loss undefined");
  return rsi;
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& a, Activation act) {
  if (act == Activation::relu) return a.cwiseMax(0.0);
  return a.array().tanh().matrix();
}

Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& h, Activation act) {
  // Derivative expressed through the activation output h.
  if (act == Activation::relu)
    return (h.array() > 0.0).cast<double>().matrix();
  return (1.0 - h.array().square()).matrix();
}

double log_add(double a, double b) {
  // log(e^a + e^b), robust to -inf.
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

DeepSurvModel::DeepSurvModel(std::vector<DeepSurvLayer> layers,
                             Activation activation, double l2_lambda,
                             std::uint64_t init_seed)
    : layers_(std::move(layers)), activation_(activation),
      l2_lambda_(l2_lambda), init_seed_(init_seed) {
  if (layers_.empty()) throw internal_error("deepsurv: no layers");
  if (layers_.back().w.rows() != 1)
    throw internal_error("deepsurv: output layer must have width 1");
  for (std::size_t l = 1; l < layers_.size(); ++l)
    if (layers_[l].w.cols() != layers_[l - 1].w.rows())
      throw internal_error("deepsurv: layer dimensions do not chain");
}

Eigen::VectorXd DeepSurvModel::forward(const Eigen::MatrixXd& x) const {
  if (x.cols() != layers_.front().w.cols())
    throw input_error("deepsurv: feature dimension mismatch");
  Eigen::MatrixXd h = x.transpose();  // in x batch
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd a = (layers_[l].w * h).colwise() + layers_[l].b;
    h = l + 1 < layers_.size() ? activate(a, activation_) : std::move(a);
  }
  return h.row(0).transpose();
}

double DeepSurvModel::predict_risk(const Eigen::VectorXd& features) const {
  Eigen::MatrixXd x(1, features.size());
  x.row(0) = features.transpose();
  return forward(x)(0);
}

std::vector<double> DeepSurvModel::predict_risk(
    const SurvivalDataset& data) const {
  const Eigen::VectorXd r = forward(data.x);
  return std::vector<double>(r.data(), r.data() + r.size());
}

DeepSurvGradients deepsurv_loss_and_gradients(const DeepSurvModel& model,
                                              const SurvivalDataset& batch,
                                              const RiskSetIndex& rsi) {
  const std::size_t n = batch.n();
  if (rsi.order.size() != n)
    throw input_error("deepsurv loss: risk sets built for a different batch");
  const auto& layers = model.layers();
  const std::size_t n_layers = layers.size();

  // Forward pass, keeping every activation for the backward sweep.
  std::vector<Eigen::MatrixXd> h(n_layers + 1);
  h[0] = batch.x.transpose();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd a = (layers[l].w * h[l]).colwise() + layers[l].b;
    h[l + 1] = l + 1 < n_layers ? activate(a, model.activation()) : std::move(a);
  }
  const Eigen::VectorXd r = h[n_layers].row(0).transpose();

  // Partial-likelihood term. Descending sweep: per tied-time group, fold the
  // group into a running log-sum-exp, then every event in the group reads it
  // as log sum_{R(Y_i)} e^r. Ascending sweep: dL/dr_j needs
  // sum over events i with Y_i <= Y_j of e^{r_j} / S_i; the sum of 1/S_i is
  // kept in log space so extreme r stay finite.
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const std::size_t n_groups = rsi.group_begin.size();
  std::vector<double> group_logsumexp(n_groups, neg_inf);

  double running = neg_inf;
  for (std::size_t gi = n_groups; gi-- > 0;) {
    for (std::size_t k = rsi.group_begin[gi]; k < rsi.group_end[gi]; ++k)
      running = log_add(running, r(static_cast<Eigen::Index>(rsi.order[k])));
    group_logsumexp[gi] = running;
  }

  const double inv_n = 1.0 / static_cast<double>(rsi.n_events);
  double loss = 0.0;
  Eigen::VectorXd dl_dr = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  double log_w = neg_inf;  // log sum over processed events of 1/S_i
  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    for (std::size_t k = rsi.group_begin[gi]; k < rsi.group_end[gi]; ++k) {
      const std::size_t j = rsi.order[k];
      if (!batch.event[j]) continue;
      loss -= inv_n * (r(static_cast<Eigen::Index>(j)) - group_logsumexp[gi]);
      log_w = log_add(log_w, -group_logsumexp[gi]);
      dl_dr(static_cast<Eigen::Index>(j)) -= inv_n;
    }
    // Everyone in this group belongs to the risk set of every event at or
    // before it; r_j + log_w <= log(group count) keeps the exp bounded.
    if (log_w != neg_inf) {
      for (std::size_t k = rsi.group_begin[gi]; k < rsi.group_end[gi]; ++k) {
        const std::size_t j = rsi.order[k];
        dl_dr(static_cast<Eigen::Index>(j)) +=
            inv_n * std::exp(r(static_cast<Eigen::Index>(j)) + log_w);
      }
    }
  }

  // L2 on weights only.
  double l2 = 0.0;
  for (const auto& layer : layers) l2 += layer.w.squaredNorm();
  loss += model.l2_lambda() * l2;

  // Backward pass.
  DeepSurvGradients out;
  out.loss = loss;
  out.dw.resize(n_layers);
  out.db.resize(n_layers);
  Eigen::MatrixXd delta = dl_dr.transpose();  // 1 x n at the output
  for (std::size_t l = n_layers; l-- > 0;) {
    if (l + 1 < n_layers)
      delta = delta.cwiseProduct(activate_grad(h[l + 1], model.activation()));
    out.dw[l] = delta * h[l].transpose() + 2.0 * model.l2_lambda() * layers[l].w;
    out.db[l] = delta.rowwise().sum();
    if (l > 0) delta = (layers[l].w.transpose() * delta).eval();
  }
  return out;
}

DeepSurvModel DeepSurvModel::fit(const SurvivalDataset& train,
                                 const DeepSurvOptions& options) {
  if (train.n_events() < 2)
    throw input_error("deepsurv fit needs at least 2 events");
  if (!(options.learning_rate > 0))
    throw input_error("deepsurv: learning rate must be positive");

  // Seeded initialization: uniform with fan-in scaling, biases zero.
  Rng rng(options.init_seed);
  std::vector<DeepSurvLayer> layers;
  std::size_t fan_in = train.p();
  for (std::size_t width : options.hidden_sizes) {
    DeepSurvLayer layer;
    layer.w.resize(static_cast<Eigen::Index>(width),
                   static_cast<Eigen::Index>(fan_in));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
        layer.w(i, j) = rng.next_uniform(-bound, bound);
    layer.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    layers.push_back(std::move(layer));
    fan_in = width;
  }
  {
    DeepSurvLayer head;
    head.w.resize(1, static_cast<Eigen::Index>(fan_in));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < head.w.cols(); ++j)
      head.w(0, j) = rng.next_uniform(-bound, bound);
    head.b = Eigen::VectorXd::Zero(1);
    layers.push_back(std::move(head));
  }

  DeepSurvModel model(std::move(layers), options.activation, options.l2_lambda,
                      options.init_seed);
  const RiskSetIndex rsi = build_risk_sets(train.time, train.event);

  std::vector<Eigen::MatrixXd> vel_w(model.layers_.size());
  std::vector<Eigen::VectorXd> vel_b(model.layers_.size());
  for (std::size_t l = 0; l < model.layers_.size(); ++l) {
    vel_w[l] = Eigen::MatrixXd::Zero(model.layers_[l].w.rows(),
                                     model.layers_[l].w.cols());
    vel_b[l] = Eigen::VectorXd::Zero(model.layers_[l].b.size());
  }

  double last_loss = 0.0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    DeepSurvGradients g = deepsurv_loss_and_gradients(model, train, rsi);
    if (!std::isfinite(g.loss))
      throw convergence_error("deepsurv: non-finite loss at epoch " +
                              std::to_string(epoch));
    last_loss = g.loss;
    for (std::size_t l = 0; l < model.layers_.size(); ++l) {
      vel_w[l] = options.momentum * vel_w[l] - options.learning_rate * g.dw[l];
      vel_b[l] = options.momentum * vel_b[l] - options.learning_rate * g.db[l];
      model.layers_[l].w += vel_w[l];
      model.layers_[l].b += vel_b[l];
    }
  }
  DeepSurvGradients final_state = deepsurv_loss_and_gradients(model, train, rsi);
  if (!std::isfinite(final_state.loss))
    throw convergence_error("deepsurv: non-finite loss after final epoch");
  last_loss = final_state.loss;

  DeepSurvTrainStats stats;
  stats.epochs_run = options.epochs;
  stats.final_loss = last_loss;
  model.set_train_stats(stats);
  return model;
}

}  // namespace hazard
