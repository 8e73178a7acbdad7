#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hazard/dataset.hpp"
#include "hazard/deepsurv.hpp"
#include "hazard/error.hpp"
#include "test_support.hpp"

using namespace hazard;
using namespace testsupport;

namespace {

// Random small network via the reconstruction constructor.
DeepSurvModel random_model(std::size_t in, std::vector<std::size_t> hidden,
                           Activation act, double l2, Rng& rng,
                           double weight_scale = 0.6) {
  std::vector<DeepSurvLayer> layers;
  std::size_t fan_in = in;
  hidden.push_back(1);
  for (std::size_t width : hidden) {
    DeepSurvLayer layer;
    layer.w.resize(static_cast<Eigen::Index>(width),
                   static_cast<Eigen::Index>(fan_in));
    layer.b.resize(static_cast<Eigen::Index>(width));
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      layer.b(i) = 0.1 * rng.next_normal();
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
        layer.w(i, j) = weight_scale * rng.next_normal();
    }
    layers.push_back(std::move(layer));
    fan_in = width;
  }
  return DeepSurvModel(std::move(layers), act, l2, 0);
}

// Literal forward pass: plain per-subject loops, no shared code with the
// production implementation.
double oracle_forward_one(const DeepSurvModel& model,
                          const std::vector<double>& features) {
  std::vector<double> h = features;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> next(static_cast<std::size_t>(layers[l].w.rows()));
    for (std::size_t i = 0; i < next.size(); ++i) {
      double a = layers[l].b(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < h.size(); ++j)
        a += layers[l].w(static_cast<Eigen::Index>(i),
                         static_cast<Eigen::Index>(j)) *
             h[j];
      if (l + 1 < layers.size())
        a = model.activation() == Activation::relu ? std::max(a, 0.0)
                                                   : std::tanh(a);
      next[i] = a;
    }
    h = std::move(next);
  }
  return h[0];
}

// Literal loss formula: risk sets as explicit lists, plain exponentials in
// long double (test instances are small enough not to overflow).
double oracle_deepsurv_loss(const DeepSurvModel& model,
                            const SurvivalDataset& batch,
                            const RiskSetIndex& rsi) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(batch.n()));
  for (std::size_t i = 0; i < batch.n(); ++i) {
    std::vector<double> feat(static_cast<std::size_t>(batch.x.cols()));
    for (Eigen::Index j = 0; j < batch.x.cols(); ++j)
      feat[static_cast<std::size_t>(j)] = batch.x(static_cast<Eigen::Index>(i), j);
    r(static_cast<Eigen::Index>(i)) = oracle_forward_one(model, feat);
  }
  long double acc = 0.0L;
  for (std::size_t k = 0; k < rsi.event_subjects.size(); ++k) {
    const std::size_t i = rsi.event_subjects[k];
    long double denom = 0.0L;
    for (std::size_t j : rsi.risk_sets[k])
      denom += std::exp(static_cast<long double>(
          r(static_cast<Eigen::Index>(j))));
    acc += static_cast<long double>(r(static_cast<Eigen::Index>(i))) -
           std::log(denom);
  }
  long double loss = -acc / static_cast<long double>(rsi.n_events);
  for (const auto& layer : model.layers())
    loss += static_cast<long double>(model.l2_lambda()) *
            static_cast<long double>(layer.w.squaredNorm());
  return static_cast<double>(loss);
}

// Flattens all parameters, runs central differences on the loss, and
// returns the max relative error against the analytic gradients.
double fd_error(const DeepSurvModel& model, const SurvivalDataset& batch,
                const RiskSetIndex& rsi, double h = 1e-5) {
  const DeepSurvGradients g = deepsurv_loss_and_gradients(model, batch, rsi);
  double worst = 0.0;
  auto perturbed = [&](std::size_t layer, bool bias, Eigen::Index a,
                       Eigen::Index b, double eps) {
    auto layers = model.layers();
    if (bias)
      layers[layer].b(a) += eps;
    else
      layers[layer].w(a, b) += eps;
    const DeepSurvModel m(std::move(layers), model.activation(),
                          model.l2_lambda(), model.init_seed());
    return deepsurv_loss_and_gradients(m, batch, rsi).loss;
  };
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
        const double fd = (perturbed(l, false, i, j, h) -
                           perturbed(l, false, i, j, -h)) /
                          (2.0 * h);
        const double an = g.dw[l](i, j);
        worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(an)));
      }
      const double fd =
          (perturbed(l, true, i, 0, h) - perturbed(l, true, i, 0, -h)) /
          (2.0 * h);
      const double an = g.db[l](i);
      worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(an)));
    }
  }
  return worst;
}

// For the relu finite-difference suite: reject instances with any hidden
// pre-activation so close to zero that the kink falls inside the stencil.
bool relu_kink_safe(const DeepSurvModel& model, const SurvivalDataset& batch,
                    double margin) {
  Eigen::MatrixXd h = batch.x;
  for (std::size_t l = 0; l + 1 < model.layers().size(); ++l) {
    Eigen::MatrixXd z =
        (h * model.layers()[l].w.transpose()).rowwise() +
        model.layers()[l].b.transpose();
    if (z.array().abs().minCoeff() < margin) return false;
    h = z.array().max(0.0);
  }
  return true;
}

}  // namespace

TEST_CASE("risk sets: hand examples") {
  {
    const auto r = build_risk_sets({1, 2, 3}, {1, 1, 1});
    REQUIRE(r.n_events == 3);
    CHECK(r.risk_sets[0].size() == 3);
    CHECK(r.risk_sets[1].size() == 2);
    CHECK(r.risk_sets[2].size() == 1);
    // Every event subject belongs to its own risk set.
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& rs = r.risk_sets[k];
      CHECK(std::find(rs.begin(), rs.end(), r.event_subjects[k]) != rs.end());
    }
  }
  {
    // Tied event times: both subjects mutually at risk.
    const auto r = build_risk_sets({2, 2}, {1, 1});
    REQUIRE(r.n_events == 2);
    for (std::size_t k = 0; k < 2; ++k) CHECK(r.risk_sets[k].size() == 2);
  }
  CHECK_THROWS_AS(build_risk_sets({1, 2}, {0, 0}), input_error);
  CHECK_THROWS_AS(build_risk_sets({}, {}), input_error);
}

TEST_CASE("risk sets: match the >= definition on random instances") {
  Rng rng(900);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rng.next_below(25);
    const auto inst = random_instance(rng, n, true);
    const auto r = build_risk_sets(inst.times, inst.events);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!inst.events[i]) continue;
      // Find i among the event subjects (sorted by time; ties arbitrary but
      // each event appears exactly once).
      bool found = false;
      for (std::size_t q = 0; q < r.event_subjects.size(); ++q) {
        if (r.event_subjects[q] != i) continue;
        found = true;
        std::vector<std::size_t> expect;
        for (std::size_t j = 0; j < n; ++j)
          if (inst.times[j] >= inst.times[i]) expect.push_back(j);
        auto got = r.risk_sets[q];
        std::sort(got.begin(), got.end());
        CHECK(got == expect);
      }
      CHECK(found);
      ++k;
    }
    CHECK(r.n_events == k);
  }
}

TEST_CASE("deepsurv loss: zero network closed form") {
  // r = 0 everywhere: loss = (log 3 + log 2 + log 1) / 3 with lambda = 0.
  auto d = make_dataset({{1}, {2}, {3}}, {1, 2, 3}, {1, 1, 1});
  std::vector<DeepSurvLayer> layers(1);
  layers[0].w = Eigen::MatrixXd::Zero(1, 1);
  layers[0].b = Eigen::VectorXd::Zero(1);
  const DeepSurvModel m(std::move(layers), Activation::relu, 0.0, 0);
  const auto rsi = build_risk_sets(d.time, d.event);
  const auto g = deepsurv_loss_and_gradients(m, d, rsi);
  CHECK(g.loss ==
        doctest::Approx((std::log(3.0) + std::log(2.0)) / 3.0).epsilon(1e-12));
}

TEST_CASE("deepsurv loss: equals the literal formula on random networks") {
  Rng rng(901);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 5 + rng.next_below(15);
    const std::size_t p = 1 + rng.next_below(3);
    const auto d = random_train_dataset(n, p, 9000 + rep, /*tied_times=*/true);
    auto m = random_model(p, rep % 2 == 0 ? std::vector<std::size_t>{4}
                                          : std::vector<std::size_t>{3, 2},
                          rep % 2 == 0 ? Activation::relu : Activation::tanh,
                          rep % 3 == 0 ? 0.01 : 0.0, rng);
    const auto rsi = build_risk_sets(d.time, d.event);
    const auto g = deepsurv_loss_and_gradients(m, d, rsi);
    CHECK(g.loss == doctest::Approx(oracle_deepsurv_loss(m, d, rsi)).epsilon(1e-11));
  }
}

TEST_CASE("deepsurv gradients: finite differences, tanh networks") {
  Rng rng(902);
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t n = 6 + rng.next_below(14);
    const std::size_t p = 1 + rng.next_below(2);
    const auto d = random_train_dataset(n, p, 9100 + rep);
    const auto m = random_model(p, {4, 3}, Activation::tanh,
                                rep % 2 == 0 ? 1e-3 : 0.0, rng);
    const auto rsi = build_risk_sets(d.time, d.event);
    CHECK(fd_error(m, d, rsi) < 1e-4);
  }
}

TEST_CASE("deepsurv gradients: finite differences, relu networks") {
  Rng rng(903);
  int done = 0;
  for (int rep = 0; rep < 60 && done < 8; ++rep) {
    const std::size_t n = 6 + rng.next_below(14);
    const auto d = random_train_dataset(n, 2, 9200 + rep);
    const auto m = random_model(2, {4}, Activation::relu, 0.0, rng);
    // Discard draws whose relu kink sits inside the difference stencil.
    if (!relu_kink_safe(m, d, 1e-3)) continue;
    const auto rsi = build_risk_sets(d.time, d.event);
    CHECK(fd_error(m, d, rsi) < 1e-4);
    ++done;
  }
  CHECK(done >= 5);  // the rejection rule must leave enough instances
}

TEST_CASE("deepsurv loss: large l2 dominates and gradients follow 2*lambda*w") {
  Rng rng(904);
  const auto d = random_train_dataset(10, 2, 9300);
  const auto m = random_model(2, {3}, Activation::tanh, 1e6, rng);
  const auto rsi = build_risk_sets(d.time, d.event);
  const auto g = deepsurv_loss_and_gradients(m, d, rsi);
  double w2 = 0.0;
  for (const auto& layer : m.layers()) w2 += layer.w.squaredNorm();
  CHECK(g.loss == doctest::Approx(1e6 * w2).epsilon(1e-3));
  for (std::size_t l = 0; l < m.layers().size(); ++l)
    for (Eigen::Index i = 0; i < m.layers()[l].w.rows(); ++i)
      for (Eigen::Index j = 0; j < m.layers()[l].w.cols(); ++j) {
        // Near-zero weights would make the relative comparison meaningless.
        if (std::abs(m.layers()[l].w(i, j)) < 0.01) continue;
        CHECK(g.dw[l](i, j) ==
              doctest::Approx(2e6 * m.layers()[l].w(i, j)).epsilon(1e-3));
      }
}

TEST_CASE("deepsurv loss: stays finite for risks up to +-500") {
  // One weight of 500 on a +-1 feature swings r between -500 and 500; the
  // log-sum-exp path must survive it.
  auto d = make_dataset({{1}, {-1}, {1}, {-1}}, {1, 2, 3, 4}, {1, 1, 1, 1});
  std::vector<DeepSurvLayer> layers(1);
  layers[0].w = Eigen::MatrixXd::Constant(1, 1, 500.0);
  layers[0].b = Eigen::VectorXd::Zero(1);
  const DeepSurvModel m(std::move(layers), Activation::relu, 0.0, 0);
  const auto rsi = build_risk_sets(d.time, d.event);
  const auto g = deepsurv_loss_and_gradients(m, d, rsi);
  CHECK(std::isfinite(g.loss));
  for (const auto& dw : g.dw) CHECK(dw.allFinite());
}

TEST_CASE("deepsurv fit: deterministic and seeded") {
  const auto d = random_train_dataset(50, 3, 905);
  DeepSurvOptions opt;
  opt.hidden_sizes = {8};
  opt.epochs = 30;
  opt.init_seed = 5;
  const auto a = DeepSurvModel::fit(d, opt);
  const auto b = DeepSurvModel::fit(d, opt);
  REQUIRE(a.layers().size() == b.layers().size());
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    CHECK((a.layers()[l].w - b.layers()[l].w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.layers()[l].b - b.layers()[l].b).cwiseAbs().maxCoeff() == 0.0);
  }
  opt.init_seed = 6;
  const auto c = DeepSurvModel::fit(d, opt);
  CHECK((a.layers()[0].w - c.layers()[0].w).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("deepsurv fit: initialization shape, bounds, zero-epoch identity") {
  const auto d = random_train_dataset(40, 3, 906);
  DeepSurvOptions opt;
  opt.hidden_sizes = {5, 4};
  opt.epochs = 0;
  opt.init_seed = 11;
  const auto m = DeepSurvModel::fit(d, opt);
  REQUIRE(m.layers().size() == 3);
  CHECK(m.layers()[0].w.rows() == 5);
  CHECK(m.layers()[0].w.cols() == 3);
  CHECK(m.layers()[1].w.rows() == 4);
  CHECK(m.layers()[2].w.rows() == 1);
  // Fan-in uniform bounds; biases zero.
  std::size_t fan_in = 3;
  for (const auto& layer : m.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    CHECK(layer.w.array().abs().maxCoeff() <= bound);
    CHECK(layer.b.isZero(0.0));
    fan_in = static_cast<std::size_t>(layer.w.rows());
  }
  // Zero epochs: the recorded loss is the loss of the initialization.
  const auto rsi = build_risk_sets(d.time, d.event);
  const auto g = deepsurv_loss_and_gradients(m, d, rsi);
  CHECK(m.train_stats().final_loss == doctest::Approx(g.loss).epsilon(1e-12));
}

TEST_CASE("deepsurv fit: training lowers the loss") {
  auto d = random_train_dataset(80, 3, 907);
  Standardizer st;
  st.fit(d);
  st.apply(d);
  DeepSurvOptions opt;
  opt.hidden_sizes = {8};
  opt.learning_rate = 1e-3;
  opt.init_seed = 2;
  opt.epochs = 0;
  const double initial = DeepSurvModel::fit(d, opt).train_stats().final_loss;
  opt.epochs = 10;
  const double after10 = DeepSurvModel::fit(d, opt).train_stats().final_loss;
  opt.epochs = 200;
  const double after200 = DeepSurvModel::fit(d, opt).train_stats().final_loss;
  CHECK(after10 < initial);
  CHECK(after200 < after10);
}

TEST_CASE("deepsurv predict: batch equals per-subject, zero net is zero") {
  const auto d = random_train_dataset(30, 2, 908);
  DeepSurvOptions opt;
  opt.hidden_sizes = {6};
  opt.epochs = 20;
  const auto m = DeepSurvModel::fit(d, opt);
  const auto batch = m.predict_risk(d);
  for (std::size_t i = 0; i < d.n(); ++i)
    CHECK(batch[i] ==
          doctest::Approx(
              m.predict_risk(d.x.row(static_cast<Eigen::Index>(i)).transpose()))
              .epsilon(1e-12));
  Eigen::VectorXd wrong(5);
  CHECK_THROWS_AS(m.predict_risk(wrong), input_error);

  std::vector<DeepSurvLayer> layers(1);
  layers[0].w = Eigen::MatrixXd::Zero(1, 2);
  layers[0].b = Eigen::VectorXd::Zero(1);
  const DeepSurvModel zero(std::move(layers), Activation::relu, 0.0, 0);
  Eigen::VectorXd x(2);
  x << 3.0, -4.0;
  CHECK(zero.predict_risk(x) == 0.0);

  // Single linear layer with weight w is the dot product.
  std::vector<DeepSurvLayer> lin(1);
  lin[0].w = Eigen::MatrixXd::Zero(1, 2);
  lin[0].w << 2.0, -1.0;
  lin[0].b = Eigen::VectorXd::Zero(1);
  const DeepSurvModel linm(std::move(lin), Activation::relu, 0.0, 0);
  CHECK(linm.predict_risk(x) == doctest::Approx(2.0 * 3.0 + 4.0).epsilon(1e-12));
}

TEST_CASE("deepsurv fit: precondition errors") {
  DeepSurvOptions opt;
  CHECK_THROWS_AS(
      DeepSurvModel::fit(make_dataset({{1}, {2}}, {1, 2}, {1, 0}), opt),
      input_error);
  const auto d = random_train_dataset(20, 2, 909);
  opt.learning_rate = 0.0;
  CHECK_THROWS_AS(DeepSurvModel::fit(d, opt), input_error);
}

TEST_CASE("deepsurv: reconstruction validates layer chaining") {
  std::vector<DeepSurvLayer> bad(2);
  bad[0].w = Eigen::MatrixXd::Zero(4, 2);
  bad[0].b = Eigen::VectorXd::Zero(4);
  bad[1].w = Eigen::MatrixXd::Zero(1, 3);  // 3 != 4
  bad[1].b = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(DeepSurvModel(std::move(bad), Activation::relu, 0.0, 0),
                  internal_error);
  std::vector<DeepSurvLayer> wide(1);
  wide[0].w = Eigen::MatrixXd::Zero(2, 3);  // output width 2
  wide[0].b = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(DeepSurvModel(std::move(wide), Activation::relu, 0.0, 0),
                  internal_error);
}
