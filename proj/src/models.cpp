#include "hazard/models.hpp"

#include <algorithm>
#include <utility>

#include "hazard/error.hpp"

namespace hazard {

namespace {

const std::vector<std::string> kTags = {
    "cox",  "aalen", "weibull",  "rsf",
    "rsf_ann", "gbcox", "deepsurv", "deepsurv_linear"};

[[noreturn]] void bad_tag(const std::string& tag) {
  throw input_error("unknown model tag: '" + tag + "'");
}

// Strict config reader: every key must be consumed, so typos fail loudly
// instead of silently running defaults.
class ConfigReader {
 public:
  ConfigReader(const std::string& tag, const nlohmann::json& config)
      : tag_(tag), config_(config) {
    if (!config.is_object())
      throw input_error(tag + ": config must be a JSON object");
  }

  double number(const std::string& key, double fallback) {
    if (!config_.contains(key)) return fallback;
    used_.push_back(key);
    const auto& v = config_.at(key);
    if (!v.is_number()) throw input_error(tag_ + ": '" + key + "' must be a number");
    return v.get<double>();
  }

  std::size_t size(const std::string& key, std::size_t fallback) {
    if (!config_.contains(key)) return fallback;
    used_.push_back(key);
    const auto& v = config_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw input_error(tag_ + ": '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }

  std::vector<std::size_t> size_list(const std::string& key,
                                     std::vector<std::size_t> fallback) {
    if (!config_.contains(key)) return fallback;
    used_.push_back(key);
    const auto& v = config_.at(key);
    if (!v.is_array()) throw input_error(tag_ + ": '" + key + "' must be an array");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() <= 0)
        throw input_error(tag_ + ": '" + key + "' entries must be positive integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::string text(const std::string& key, std::string fallback) {
    if (!config_.contains(key)) return fallback;
    used_.push_back(key);
    const auto& v = config_.at(key);
    if (!v.is_string()) throw input_error(tag_ + ": '" + key + "' must be a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (auto it = config_.begin(); it != config_.end(); ++it) {
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end())
        throw input_error(tag_ + ": unknown hyperparameter '" + it.key() + "'");
    }
  }

 private:
  std::string tag_;
  const nlohmann::json& config_;
  std::vector<std::string> used_;
};

CoxOptions cox_options(ConfigReader& r) {
  CoxOptions o;
  o.ridge = r.number("ridge", o.ridge);
  if (o.ridge < 0) throw input_error("cox: ridge must be >= 0");
  return o;
}

AalenOptions aalen_options(ConfigReader& r) {
  AalenOptions o;
  o.ridge_rel = r.number("ridge_rel", o.ridge_rel);
  if (o.ridge_rel < 0) throw input_error("aalen: ridge_rel must be >= 0");
  return o;
}

ForestOptions forest_options(ConfigReader& r, ForestVariant variant) {
  ForestOptions o;
  o.variant = variant;
  o.n_trees = r.size("n_trees", o.n_trees);
  o.mtry = r.size("mtry", o.mtry);
  o.min_leaf_size = r.size("min_leaf_size", o.min_leaf_size);
  o.max_depth = r.size("max_depth", o.max_depth);
  if (o.n_trees == 0) throw input_error("forest: n_trees must be >= 1");
  if (o.min_leaf_size == 0) throw input_error("forest: min_leaf_size must be >= 1");
  return o;
}

BoostingOptions boosting_options(ConfigReader& r) {
  BoostingOptions o;
  o.n_stages = r.size("n_stages", o.n_stages);
  o.learning_rate = r.number("learning_rate", o.learning_rate);
  o.max_depth = r.size("max_depth", o.max_depth);
  o.min_leaf_size = r.size("min_leaf_size", o.min_leaf_size);
  o.subsample = r.number("subsample", o.subsample);
  return o;
}

DeepSurvOptions deepsurv_options(ConfigReader& r, bool linear) {
  DeepSurvOptions o;
  if (linear) {
    o.hidden_sizes = {};
    o.learning_rate = 0.01;
    o.l2_lambda = 0.0;
    o.epochs = 4000;
  }
  o.hidden_sizes = r.size_list("hidden", o.hidden_sizes);
  if (linear && !o.hidden_sizes.empty())
    throw input_error("deepsurv_linear: hidden layers are not allowed");
  const std::string act = r.text("activation", "relu");
  if (act == "relu") o.activation = Activation::relu;
  else if (act == "tanh") o.activation = Activation::tanh;
  else throw input_error("deepsurv: activation must be 'relu' or 'tanh'");
  o.learning_rate = r.number("learning_rate", o.learning_rate);
  o.l2_lambda = r.number("l2", o.l2_lambda);
  o.epochs = r.size("epochs", o.epochs);
  o.momentum = r.number("momentum", o.momentum);
  if (o.learning_rate <= 0) throw input_error("deepsurv: learning_rate must be > 0");
  if (o.l2_lambda < 0) throw input_error("deepsurv: l2 must be >= 0");
  return o;
}

}  // namespace

const std::vector<std::string>& model_tags() { return kTags; }

bool is_model_tag(const std::string& tag) {
  return std::find(kTags.begin(), kTags.end(), tag) != kTags.end();
}

nlohmann::json default_config(const std::string& tag) {
  if (tag == "cox") return {{"ridge", 0.0}};
  if (tag == "aalen") return {{"ridge_rel", 1e-6}};
  if (tag == "weibull") return nlohmann::json::object();
  if (tag == "rsf" || tag == "rsf_ann")
    return {{"n_trees", 200}, {"mtry", 0}, {"min_leaf_size", 10}, {"max_depth", 0}};
  if (tag == "gbcox")
    return {{"n_stages", 100}, {"learning_rate", 0.1}, {"max_depth", 3},
            {"min_leaf_size", 10}, {"subsample", 1.0}};
  if (tag == "deepsurv")
    return {{"hidden", {16}}, {"activation", "relu"}, {"learning_rate", 1e-3},
            {"l2", 1e-4}, {"epochs", 500}};
  if (tag == "deepsurv_linear")
    return {{"hidden", nlohmann::json::array()}, {"activation", "relu"},
            {"learning_rate", 0.01}, {"l2", 0.0}, {"epochs", 4000}};
  bad_tag(tag);
}

bool wants_standardization(const std::string& tag) {
  if (!is_model_tag(tag)) bad_tag(tag);
  // Trees split on order statistics, so z-scoring would only obscure the
  // thresholds; every other family solves a scale-sensitive optimization.
  return tag != "rsf" && tag != "rsf_ann";
}

AnyModel AnyModel::fit(const std::string& tag, const nlohmann::json& config,
                       const SurvivalDataset& train, std::uint64_t seed) {
  if (!is_model_tag(tag)) bad_tag(tag);

  std::optional<Standardizer> standardizer;
  const SurvivalDataset* fit_data = &train;
  SurvivalDataset scaled;
  if (wants_standardization(tag)) {
    Standardizer s;
    s.fit(train);
    scaled = train;
    s.apply(scaled);
    standardizer = std::move(s);
    fit_data = &scaled;
  }

  ConfigReader r(tag, config);
  Impl impl;
  if (tag == "cox") {
    auto o = cox_options(r);
    r.finish();
    impl = CoxModel::fit(*fit_data, o);
  } else if (tag == "aalen") {
    auto o = aalen_options(r);
    r.finish();
    impl = AalenModel::fit(*fit_data, o);
  } else if (tag == "weibull") {
    r.finish();
    impl = WeibullAftModel::fit(*fit_data);
  } else if (tag == "rsf" || tag == "rsf_ann") {
    auto o = forest_options(r, tag == "rsf" ? ForestVariant::ensemble_chf
                                            : ForestVariant::adaptive_nn_km);
    r.finish();
    impl = SurvivalForest::fit(*fit_data, o, seed);
  } else if (tag == "gbcox") {
    auto o = boosting_options(r);
    r.finish();
    impl = BoostedCoxModel::fit(*fit_data, o, seed);
  } else {
    auto o = deepsurv_options(r, tag == "deepsurv_linear");
    o.init_seed = seed;
    r.finish();
    impl = DeepSurvModel::fit(*fit_data, o);
  }

  return AnyModel(tag, config, seed, std::move(standardizer), std::move(impl));
}

std::vector<double> AnyModel::predict_risk(const SurvivalDataset& data) const {
  const SurvivalDataset* eval = &data;
  SurvivalDataset scaled;
  if (std_) {
    scaled = data;
    std_->apply(scaled);
    eval = &scaled;
  }
  return std::visit([&](const auto& m) { return m.predict_risk(*eval); }, impl_);
}

}  // namespace hazard
