#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hazard/aalen.hpp"
#include "hazard/boosting.hpp"
#include "hazard/cox.hpp"
#include "hazard/dataset.hpp"
#include "hazard/deepsurv.hpp"
#include "hazard/forest.hpp"
#include "hazard/types.hpp"
#include "hazard/weibull.hpp"

namespace hazard {

// Model tags accepted by the CLI and the tuning module.
// cox, aalen, weibull: the classical estimators.
// rsf: random survival forest, ensemble-mortality risk.
// rsf_ann: the adaptive-nearest-neighbors variant with Kaplan-Meier leaves.
// gbcox: gradient boosting with the Cox partial-likelihood loss.
// deepsurv: MLP risk network; deepsurv_linear: its no-hidden-layer special
// case, kept separate because its comparison against cox is a reported
// result of its own.
const std::vector<std::string>& model_tags();
bool is_model_tag(const std::string& tag);

// Default hyperparameter configuration for a tag (JSON object, the same
// shape random search draws).
nlohmann::json default_config(const std::string& tag);

// Whether features should be z-scored (train statistics) before fit and
// prediction for this model family.
bool wants_standardization(const std::string& tag);

// A fitted model of any family plus everything needed to score new data
// (standardizer, configuration, seed).
class AnyModel {
 public:
  using Impl = std::variant<CoxModel, AalenModel, WeibullAftModel,
                            SurvivalForest, BoostedCoxModel, DeepSurvModel>;

  static AnyModel fit(const std::string& tag, const nlohmann::json& config,
                      const SurvivalDataset& train, std::uint64_t seed);

  std::vector<double> predict_risk(const SurvivalDataset& data) const;

  const std::string& tag() const { return tag_; }
  const nlohmann::json& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const Impl& impl() const { return impl_; }
  const std::optional<Standardizer>& standardizer() const { return std_; }

  AnyModel() = default;
  AnyModel(std::string tag, nlohmann::json config, std::uint64_t seed,
           std::optional<Standardizer> standardizer, Impl impl)
      : tag_(std::move(tag)), config_(std::move(config)), seed_(seed),
        std_(std::move(standardizer)), impl_(std::move(impl)) {}

 private:
  std::string tag_;
  nlohmann::json config_;
  std::uint64_t seed_ = 0;
  std::optional<Standardizer> std_;
  Impl impl_;
};

}  // namespace hazard
