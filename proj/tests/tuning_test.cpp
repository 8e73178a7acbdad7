#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hazard/error.hpp"
#include "hazard/models.hpp"
#include "hazard/rng.hpp"
#include "hazard/tuning.hpp"
#include "test_support.hpp"

using namespace hazard;
using namespace testsupport;

TEST_CASE("search space: availability per model family") {
  CHECK(has_search_space("cox"));
  CHECK(has_search_space("aalen"));
  CHECK(has_search_space("rsf"));
  CHECK(has_search_space("rsf_ann"));
  CHECK(has_search_space("gbcox"));
  CHECK(has_search_space("deepsurv"));
  CHECK_FALSE(has_search_space("weibull"));
  CHECK_FALSE(has_search_space("deepsurv_linear"));
  CHECK_THROWS_AS(has_search_space("whatever"), input_error);
  Rng rng(1);
  CHECK_THROWS_AS(sample_config("weibull", 3, rng), input_error);
  CHECK_THROWS_AS(sample_config("deepsurv_linear", 3, rng), input_error);
  CHECK_THROWS_AS(sample_config("rsf", 0, rng), input_error);
}

TEST_CASE("search space: sampled configurations live in the documented ranges") {
  Rng rng(77);
  const int reps = 200;

  std::set<int> rsf_trees, rsf_mtry, rsf_leaf, rsf_depth;
  std::set<double> gb_subsample;
  std::set<std::string> ds_hidden;
  std::set<int> ds_epochs;

  for (int i = 0; i < reps; ++i) {
    {
      const auto c = sample_config("cox", 4, rng);
      REQUIRE(c.size() == 1);
      const double ridge = c.at("ridge").get<double>();
      CHECK(ridge >= 1e-6);
      CHECK(ridge <= 1.0);
    }
    {
      const auto c = sample_config("aalen", 4, rng);
      REQUIRE(c.size() == 1);
      const double rr = c.at("ridge_rel").get<double>();
      CHECK(rr >= 1e-8);
      CHECK(rr <= 1e-2);
    }
    {
      const auto c = sample_config("rsf", 4, rng);
      REQUIRE(c.size() == 4);
      rsf_trees.insert(c.at("n_trees").get<int>());
      rsf_mtry.insert(c.at("mtry").get<int>());
      rsf_leaf.insert(c.at("min_leaf_size").get<int>());
      rsf_depth.insert(c.at("max_depth").get<int>());
      CHECK(c.at("mtry").get<int>() >= 1);
      CHECK(c.at("mtry").get<int>() <= 4);
    }
    {
      const auto c = sample_config("gbcox", 4, rng);
      REQUIRE(c.size() == 5);
      CHECK(c.at("n_stages").get<int>() >= 50);
      CHECK(c.at("n_stages").get<int>() <= 500);
      CHECK(c.at("learning_rate").get<double>() >= 0.01);
      CHECK(c.at("learning_rate").get<double>() <= 0.3);
      CHECK(c.at("max_depth").get<int>() >= 1);
      CHECK(c.at("max_depth").get<int>() <= 4);
      CHECK(c.at("min_leaf_size").get<int>() == 10);
      gb_subsample.insert(c.at("subsample").get<double>());
    }
    {
      const auto c = sample_config("deepsurv", 4, rng);
      REQUIRE(c.size() == 5);
      CHECK(c.at("activation").get<std::string>() == "relu");
      CHECK(c.at("learning_rate").get<double>() >= 1e-4);
      CHECK(c.at("learning_rate").get<double>() <= 1e-2);
      CHECK(c.at("l2").get<double>() >= 1e-5);
      CHECK(c.at("l2").get<double>() <= 1e-1);
      ds_hidden.insert(c.at("hidden").dump());
      ds_epochs.insert(c.at("epochs").get<int>());
    }
  }

  // Every discrete choice shows up across 200 draws.
  CHECK(rsf_trees == std::set<int>{100, 200, 500});
  CHECK(rsf_mtry == std::set<int>{1, 2, 3, 4});
  CHECK(rsf_leaf == std::set<int>{3, 5, 10, 20});
  CHECK(rsf_depth == std::set<int>{0, 3, 5, 8});
  CHECK(gb_subsample == std::set<double>{0.5, 0.8, 1.0});
  CHECK(ds_hidden ==
        std::set<std::string>{"[8]", "[16]", "[32]", "[16,16]"});
  CHECK(ds_epochs == std::set<int>{200, 500, 1000});

  // Sampled configurations are valid inputs for the strict config reader.
  const auto train = random_train_dataset(60, 4, 771);
  Rng fit_rng(78);
  for (int i = 0; i < 3; ++i) {
    CHECK_NOTHROW(AnyModel::fit("cox", sample_config("cox", 4, fit_rng), train, 0));
    CHECK_NOTHROW(
        AnyModel::fit("aalen", sample_config("aalen", 4, fit_rng), train, 0));
  }
}

TEST_CASE("random search: deterministic in every argument") {
  const auto train = random_train_dataset(60, 3, 772);
  const auto a = random_search("cox", train, 4, 3, 5);
  const auto b = random_search("cox", train, 4, 3, 5);
  REQUIRE(a.trials.size() == 4);
  REQUIRE(b.trials.size() == 4);
  CHECK(a.model == "cox");
  CHECK(a.seed == 5);
  CHECK(a.budget == 4);
  CHECK(a.folds == 3);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(a.trials[t].config == b.trials[t].config);
    CHECK(a.trials[t].failed == b.trials[t].failed);
    CHECK(a.trials[t].fold_scores == b.trials[t].fold_scores);
  }
  CHECK(a.best_index == b.best_index);
  CHECK(a.best_config == b.best_config);
  CHECK(a.best_score == b.best_score);

  const auto c = random_search("cox", train, 4, 3, 6);
  CHECK(a.trials[0].config.dump() != c.trials[0].config.dump());
}

TEST_CASE("random search: winner is the earliest argmax of the mean scores") {
  const auto train = random_train_dataset(80, 3, 773);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto r = random_search("cox", train, 6, 3, seed);
    REQUIRE(r.trials.size() == 6);
    std::size_t expect = 0;
    double best = -1e300;
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
      const auto& trial = r.trials[t];
      if (trial.failed) {
        CHECK(trial.fold_scores.empty());
        CHECK(std::isnan(trial.mean_score));
        CHECK_FALSE(trial.error.empty());
        continue;
      }
      REQUIRE(trial.fold_scores.size() == 3);
      double total = 0.0;
      for (double s : trial.fold_scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        total += s;
      }
      CHECK(trial.mean_score == total / 3.0);
      if (trial.mean_score > best) {  // strict: ties keep the earliest
        best = trial.mean_score;
        expect = t;
      }
    }
    CHECK(r.best_index == expect);
    CHECK(r.best_score == best);
    CHECK(r.best_config == r.trials[expect].config);
  }
}

TEST_CASE("random search: works for the forest family") {
  const auto train = random_train_dataset(50, 3, 774);
  const auto r = random_search("rsf", train, 2, 2, 4);
  REQUIRE(r.trials.size() == 2);
  bool any_ok = false;
  for (const auto& t : r.trials) any_ok |= !t.failed;
  CHECK(any_ok);
  CHECK(r.best_score > 0.0);
  // The winning configuration refits cleanly on the full training set.
  CHECK_NOTHROW(AnyModel::fit("rsf", r.best_config, train, 4));
}

TEST_CASE("random search: budget of one") {
  const auto train = random_train_dataset(60, 2, 775);
  const auto r = random_search("aalen", train, 1, 3, 9);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.best_index == 0);
  CHECK(r.best_config == r.trials[0].config);
}

TEST_CASE("random search: argument validation") {
  const auto train = random_train_dataset(40, 2, 776);
  CHECK_THROWS_AS(random_search("weibull", train, 3, 3, 0), input_error);
  CHECK_THROWS_AS(random_search("deepsurv_linear", train, 3, 3, 0), input_error);
  CHECK_THROWS_AS(random_search("cox", train, 0, 3, 0), input_error);
  CHECK_THROWS_AS(random_search("cox", train, 3, 1, 0), input_error);
  CHECK_THROWS_AS(random_search("bogus", train, 3, 3, 0), input_error);
}

TEST_CASE("random search: every configuration failing is a convergence error") {
  // Six subjects, two events, five folds: the two folds whose validation
  // part holds an event leave the fit part with a single event, which no
  // cox fit accepts. Folds are shared across trials, so every trial dies.
  const auto train = make_dataset(
      {{0.1}, {0.9}, {0.4}, {0.7}, {0.2}, {0.6}},
      {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, {1, 1, 0, 0, 0, 0});
  CHECK_THROWS_AS(random_search("cox", train, 2, 5, 3), convergence_error);
}
