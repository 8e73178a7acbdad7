#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "hazard/cox.hpp"
#include "hazard/dataset.hpp"
#include "hazard/error.hpp"
#include "hazard/models.hpp"
#include "hazard/serialize.hpp"
#include "hazard/weibull.hpp"
#include "test_support.hpp"

using namespace hazard;
using namespace testsupport;

namespace {

std::filesystem::path temp_path(const std::string& stem) {
  return std::filesystem::temp_directory_path() /
         ("hazard_models_test_" + stem + ".json");
}

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

// Small configs so the all-tags loops stay fast; every family still does
// real work.
nlohmann::json small_config(const std::string& tag) {
  if (tag == "rsf" || tag == "rsf_ann")
    return {{"n_trees", 12}, {"mtry", 0}, {"min_leaf_size", 5}, {"max_depth", 4}};
  if (tag == "gbcox")
    return {{"n_stages", 15}, {"learning_rate", 0.1}, {"max_depth", 2},
            {"min_leaf_size", 5}, {"subsample", 1.0}};
  if (tag == "deepsurv")
    return {{"hidden", {6}}, {"activation", "relu"}, {"learning_rate", 1e-3},
            {"l2", 1e-4}, {"epochs", 40}};
  if (tag == "deepsurv_linear")
    return {{"hidden", nlohmann::json::array()}, {"activation", "relu"},
            {"learning_rate", 0.01}, {"l2", 0.0}, {"epochs", 80}};
  return default_config(tag);
}

}  // namespace

TEST_CASE("model registry: tags and membership") {
  const auto& tags = model_tags();
  REQUIRE(tags.size() == 8);
  const std::vector<std::string> expected = {
      "cox", "aalen", "weibull", "rsf",
      "rsf_ann", "gbcox", "deepsurv", "deepsurv_linear"};
  CHECK(tags == expected);
  for (const auto& t : tags) CHECK(is_model_tag(t));
  CHECK_FALSE(is_model_tag("coxph"));
  CHECK_FALSE(is_model_tag(""));
  CHECK_THROWS_AS(default_config("coxph"), input_error);
}

TEST_CASE("model registry: standardization policy") {
  CHECK(wants_standardization("cox"));
  CHECK(wants_standardization("aalen"));
  CHECK(wants_standardization("weibull"));
  CHECK(wants_standardization("gbcox"));
  CHECK(wants_standardization("deepsurv"));
  CHECK(wants_standardization("deepsurv_linear"));
  CHECK_FALSE(wants_standardization("rsf"));
  CHECK_FALSE(wants_standardization("rsf_ann"));
  CHECK_THROWS_AS(wants_standardization("nonsense"), input_error);
}

TEST_CASE("AnyModel: every tag fits its default config and scores data") {
  const auto train = random_train_dataset(80, 3, 41);
  const auto test = random_train_dataset(30, 3, 42);
  for (const auto& tag : model_tags()) {
    INFO("tag = ", tag);
    const auto m = AnyModel::fit(tag, small_config(tag), train, 7);
    CHECK(m.tag() == tag);
    CHECK(m.seed() == 7);
    CHECK(m.standardizer().has_value() == wants_standardization(tag));
    const auto risks = m.predict_risk(test);
    REQUIRE(risks.size() == test.n());
    for (double r : risks) CHECK(std::isfinite(r));
  }
}

TEST_CASE("AnyModel: standardization happens exactly as documented") {
  const auto train = random_train_dataset(70, 3, 43);
  const auto test = random_train_dataset(25, 3, 44);

  // cox through the facade == cox fit by hand on z-scored features.
  const auto facade = AnyModel::fit("cox", default_config("cox"), train, 0);
  Standardizer st;
  st.fit(train);
  SurvivalDataset strain = train, stest = test;
  st.apply(strain);
  st.apply(stest);
  const auto direct = CoxModel::fit(strain, CoxOptions{});
  const auto fr = facade.predict_risk(test);
  const auto dr = direct.predict_risk(stest);
  REQUIRE(fr.size() == dr.size());
  for (std::size_t i = 0; i < fr.size(); ++i) CHECK(fr[i] == dr[i]);

  // Forests see the raw features: same seed, same predictions.
  const auto forest_facade = AnyModel::fit("rsf", small_config("rsf"), train, 9);
  CHECK_FALSE(forest_facade.standardizer().has_value());
  ForestOptions fo;
  fo.variant = ForestVariant::ensemble_chf;
  fo.n_trees = 12;
  fo.mtry = 0;
  fo.min_leaf_size = 5;
  fo.max_depth = 4;
  const auto forest_direct = SurvivalForest::fit(train, fo, 9);
  const auto ffr = forest_facade.predict_risk(test);
  const auto fdr = forest_direct.predict_risk(test);
  for (std::size_t i = 0; i < ffr.size(); ++i) CHECK(ffr[i] == fdr[i]);
}

TEST_CASE("risk ordering is invariant to the standardization toggle") {
  const auto train = random_train_dataset(120, 3, 45);
  const auto test = random_train_dataset(40, 3, 46);

  {
    const auto standardized = AnyModel::fit("cox", default_config("cox"), train, 0);
    const auto raw = CoxModel::fit(train, CoxOptions{});
    CHECK(argsort(standardized.predict_risk(test)) ==
          argsort(raw.predict_risk(test)));
  }
  {
    const auto standardized =
        AnyModel::fit("weibull", default_config("weibull"), train, 0);
    const auto raw = WeibullAftModel::fit(train);
    CHECK(argsort(standardized.predict_risk(test)) ==
          argsort(raw.predict_risk(test)));
  }
}

TEST_CASE("AnyModel: config validation is strict") {
  const auto train = random_train_dataset(50, 2, 47);
  CHECK_THROWS_AS(AnyModel::fit("nope", nlohmann::json::object(), train, 0),
                  input_error);
  CHECK_THROWS_WITH_AS(
      AnyModel::fit("cox", {{"ridgee", 1.0}}, train, 0),
      doctest::Contains("unknown hyperparameter"), input_error);
  CHECK_THROWS_AS(AnyModel::fit("cox", {{"ridge", "high"}}, train, 0),
                  input_error);
  CHECK_THROWS_AS(AnyModel::fit("cox", nlohmann::json::array(), train, 0),
                  input_error);
  CHECK_THROWS_AS(AnyModel::fit("rsf", {{"n_trees", 0}}, train, 0), input_error);
  CHECK_THROWS_AS(AnyModel::fit("rsf", {{"n_trees", -3}}, train, 0), input_error);
  CHECK_THROWS_AS(
      AnyModel::fit("deepsurv", {{"activation", "sigmoid"}}, train, 0),
      input_error);
  CHECK_THROWS_AS(
      AnyModel::fit("deepsurv_linear", {{"hidden", {4}}}, train, 0),
      input_error);
  // Boosting config errors surface through the facade too.
  CHECK_THROWS_AS(AnyModel::fit("gbcox", {{"learning_rate", 0.0}}, train, 0),
                  input_error);
}

TEST_CASE("serialization: round trip preserves predictions bit for bit") {
  const auto train = random_train_dataset(60, 3, 48, /*tied_times=*/true);
  const auto test = random_train_dataset(25, 3, 49);
  for (const auto& tag : model_tags()) {
    INFO("tag = ", tag);
    const auto fitted = AnyModel::fit(tag, small_config(tag), train, 11);
    const auto path = temp_path("roundtrip_" + tag);
    save_model(fitted, path.string());
    const auto loaded = load_model(path.string());
    std::filesystem::remove(path);

    CHECK(loaded.tag() == fitted.tag());
    CHECK(loaded.seed() == fitted.seed());
    CHECK(loaded.config() == fitted.config());
    CHECK(loaded.standardizer().has_value() ==
          fitted.standardizer().has_value());
    if (fitted.standardizer()) {
      CHECK((loaded.standardizer()->mean - fitted.standardizer()->mean)
                .cwiseAbs()
                .maxCoeff() == 0.0);
      CHECK((loaded.standardizer()->scale - fitted.standardizer()->scale)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    }

    const auto a = fitted.predict_risk(test);
    const auto b = loaded.predict_risk(test);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // Serializing the reloaded model reproduces the document exactly.
    CHECK(model_to_json(loaded) == model_to_json(fitted));
  }
}

TEST_CASE("serialization: envelope carries format, version, and metadata") {
  const auto train = random_train_dataset(50, 2, 50);
  const auto m = AnyModel::fit("cox", {{"ridge", 0.5}}, train, 123);
  const auto j = model_to_json(m);
  CHECK(j.at("format") == "hazard-model");
  CHECK(j.at("schema_version") == kModelSchemaVersion);
  CHECK(j.at("tag") == "cox");
  CHECK(j.at("seed") == 123);
  CHECK(j.at("config").at("ridge") == 0.5);
  CHECK_FALSE(j.at("standardizer").is_null());
  CHECK(j.at("payload").contains("beta"));
  CHECK(j.contains("library_version"));
}

TEST_CASE("serialization: malformed documents are rejected") {
  const auto train = random_train_dataset(50, 2, 51);
  const auto m = AnyModel::fit("cox", default_config("cox"), train, 0);
  auto j = model_to_json(m);

  {
    auto bad = j;
    bad["format"] = "something-else";
    CHECK_THROWS_WITH_AS(model_from_json(bad),
                         doctest::Contains("not a hazard model"), input_error);
  }
  {
    auto bad = j;
    bad["schema_version"] = 999;
    CHECK_THROWS_WITH_AS(model_from_json(bad),
                         doctest::Contains("schema_version"), input_error);
  }
  {
    auto bad = j;
    bad["tag"] = "mystery";
    CHECK_THROWS_AS(model_from_json(bad), input_error);
  }
  {
    auto bad = j;
    bad["payload"].erase("beta");
    CHECK_THROWS_AS(model_from_json(bad), input_error);
  }
  CHECK_THROWS_AS(model_from_json(nlohmann::json::array()), input_error);

  // A file that is not JSON at all.
  const auto path = temp_path("corrupt");
  {
    std::ofstream out(path);
    out << "{ this is : not json";
  }
  CHECK_THROWS_AS(load_model(path.string()), input_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model((path.string() + ".does_not_exist")), input_error);
}

TEST_CASE("serialization: step functions round trip exactly") {
  const StepFunction f({0.5, 1.25, 3.0}, {0.125, 0.7, 1.9}, 0.0625);
  const auto g = step_from_json(step_to_json(f));
  CHECK(g.knots() == f.knots());
  CHECK(g.values() == f.values());
  CHECK(g.initial() == f.initial());
  for (double t : {0.0, 0.5, 0.9, 1.25, 2.0, 3.0, 10.0})
    CHECK(g(t) == f(t));

  const StepFunction empty;
  const auto e = step_from_json(step_to_json(empty));
  CHECK(e.empty());
  CHECK(e(5.0) == 0.0);
}
