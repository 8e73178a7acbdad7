#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hazard/error.hpp"
#include "hazard/metrics.hpp"
#include "hazard/rng.hpp"
#include "test_support.hpp"

using namespace hazard;
using namespace testsupport;

TEST_CASE("eligible pairs: censoring and tie filters") {
  using P = std::vector<std::pair<std::size_t, std::size_t>>;
  // Earlier time censored -> pair dropped.
  CHECK(eligible_pairs({1, 2}, {0, 1}) == P{});
  // Earlier time is an event -> kept.
  CHECK(eligible_pairs({1, 2}, {1, 0}) == P{{0, 1}});
  // Tied times, both censored -> dropped.
  CHECK(eligible_pairs({5, 5}, {0, 0}) == P{});
  // Tied times, at least one event -> kept.
  CHECK(eligible_pairs({5, 5}, {1, 0}) == P{{0, 1}});
  CHECK(eligible_pairs({5, 5}, {1, 1}) == P{{0, 1}});
}

TEST_CASE("concordance: hand cases") {
  // Perfect ordering: earlier death, higher risk.
  {
    const auto r = concordance_index({1, 2, 3}, {1, 1, 1}, {3, 2, 1});
    CHECK(r.index == 1.0);
    CHECK(r.n_pairs == 3);
    CHECK(r.score_sum == 3.0);
  }
  // Perfectly wrong model.
  {
    const auto r = concordance_index({1, 2, 3}, {1, 1, 1}, {1, 2, 3});
    CHECK(r.index == 0.0);
  }
  // Risk tie on distinct times scores one half.
  {
    const auto r = concordance_index({1, 2}, {1, 1}, {7, 7});
    CHECK(r.index == 0.5);
    CHECK(r.n_pairs == 1);
  }
  // Tied times, both events: 1 when risks tie, else 0.5.
  {
    CHECK(concordance_index({4, 4}, {1, 1}, {2, 2}).index == 1.0);
    CHECK(concordance_index({4, 4}, {1, 1}, {2, 5}).index == 0.5);
  }
  // Tied times, one event: 1 when the event subject ranks strictly higher.
  {
    CHECK(concordance_index({4, 4}, {1, 0}, {9, 1}).index == 1.0);
    CHECK(concordance_index({4, 4}, {1, 0}, {1, 9}).index == 0.5);
    CHECK(concordance_index({4, 4}, {0, 1}, {1, 9}).index == 1.0);
  }
  // Mixed example, scored by hand:
  //   subjects: (t=1,e=1,r=2), (t=1,e=0,r=1), (t=3,e=1,r=1)
  //   pair(0,1): tied time, one event, event risk higher -> 1
  //   pair(0,2): distinct, earlier event, higher risk    -> 1
  //   pair(1,2): distinct, earlier censored              -> ineligible
  {
    const auto r = concordance_index({1, 1, 3}, {1, 0, 1}, {2, 1, 1});
    CHECK(r.n_pairs == 2);
    CHECK(r.index == 1.0);
  }
}

TEST_CASE("concordance: zero eligible pairs is an error, not 0.5") {
  CHECK_THROWS_AS(concordance_index({1, 2}, {0, 1}, {1, 2}), input_error);
  CHECK_THROWS_AS(concordance_index({1}, {1}, {0}), input_error);
  CHECK_THROWS_AS(concordance_index({3, 3}, {0, 0}, {1, 2}), input_error);
}

TEST_CASE("concordance: input validation") {
  CHECK_THROWS_AS(concordance_index({}, {}, {}), input_error);
  CHECK_THROWS_AS(concordance_index({1, 2}, {1}, {1, 2}), input_error);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(concordance_index({1, 2}, {1, 1}, {inf, 0}), input_error);
  CHECK_THROWS_AS(concordance_index({1, 2}, {1, 1}, {std::nan(""), 0}),
                  input_error);
}

TEST_CASE("concordance: equals the literal pairwise oracle exactly") {
  Rng rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng.next_below(29);
    const auto inst = random_instance(rng, n, rep % 2 == 0);
    const auto oracle = oracle_concordance(inst.times, inst.events, inst.risks);
    if (oracle.n_pairs == 0) {
      CHECK_THROWS_AS(concordance_index(inst.times, inst.events, inst.risks),
                      input_error);
      continue;
    }
    const auto fast = concordance_index(inst.times, inst.events, inst.risks);
    REQUIRE(fast.n_pairs == oracle.n_pairs);
    CHECK(fast.score_sum == static_cast<double>(oracle.half_units) * 0.5);
    CHECK(fast.index == oracle.index());
  }
}

TEST_CASE("concordance: antisymmetry under risk negation") {
  Rng rng(77);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 3 + rng.next_below(20);
    auto inst = random_instance(rng, n, false);  // continuous risks: no ties
    OracleConcordance oracle =
        oracle_concordance(inst.times, inst.events, inst.risks);
    if (oracle.n_pairs == 0) continue;
    const auto a = concordance_index(inst.times, inst.events, inst.risks);
    auto neg = inst.risks;
    for (auto& r : neg) r = -r;
    const auto b = concordance_index(inst.times, inst.events, neg);
    CHECK(a.index + b.index == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("concordance: invariant under strictly increasing transforms") {
  Rng rng(78);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 3 + rng.next_below(20);
    auto inst = random_instance(rng, n, true);
    if (oracle_concordance(inst.times, inst.events, inst.risks).n_pairs == 0)
      continue;
    const auto a = concordance_index(inst.times, inst.events, inst.risks);
    auto mapped = inst.risks;
    for (auto& r : mapped) r = std::atan(3.0 * r) + 2.0;  // strictly increasing
    const auto b = concordance_index(inst.times, inst.events, mapped);
    CHECK(a.index == b.index);
    CHECK(a.n_pairs == b.n_pairs);
  }
}

TEST_CASE("kaplan-meier: hand product-limit examples") {
  {
    const auto s = kaplan_meier({1, 2, 3}, {1, 1, 1});
    REQUIRE(s.knots() == std::vector<double>{1, 2, 3});
    CHECK(s.initial() == 1.0);
    CHECK(s(0.5) == 1.0);
    CHECK(s(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(s(2.5) == doctest::Approx(1.0 / 3.0));
    CHECK(s(3.0) == doctest::Approx(0.0));
  }
  {
    // Censoring at t=2 shrinks the t=3 risk set to one subject.
    const auto s = kaplan_meier({1, 2, 3}, {1, 0, 1});
    REQUIRE(s.knots() == std::vector<double>{1, 3});
    CHECK(s(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(s(2.9) == doctest::Approx(2.0 / 3.0));
    CHECK(s(3.0) == doctest::Approx(0.0));
  }
  {
    // No events: flat at one, no knots.
    const auto s = kaplan_meier({1, 2, 3}, {0, 0, 0});
    CHECK(s.empty());
    CHECK(s(2.0) == 1.0);
  }
}

TEST_CASE("kaplan-meier: equals the full-scan oracle on random data") {
  Rng rng(5150);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 1 + rng.next_below(40);
    const auto inst = random_instance(rng, n, true);
    const auto fast = kaplan_meier(inst.times, inst.events);
    const auto slow = oracle_kaplan_meier(inst.times, inst.events);
    REQUIRE(fast.knots().size() == slow.size());
    for (std::size_t k = 0; k < slow.size(); ++k) {
      CHECK(fast.knots()[k] == slow[k].time);
      CHECK(fast.values()[k] == doctest::Approx(slow[k].value).epsilon(1e-12));
    }
  }
}

TEST_CASE("kaplan-meier: no censoring means one minus the ECDF") {
  Rng rng(61);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.next_below(30);
    std::vector<double> times;
    std::vector<std::uint8_t> events(n, 1);
    for (std::size_t i = 0; i < n; ++i)
      times.push_back(1.0 + rng.next_below(6));
    const auto s = kaplan_meier(times, events);
    for (std::size_t k = 0; k < s.knots().size(); ++k) {
      const double t = s.knots()[k];
      double count = 0;
      for (double ti : times) count += (ti <= t) ? 1.0 : 0.0;
      CHECK(s.values()[k] ==
            doctest::Approx(1.0 - count / static_cast<double>(n))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("nelson-aalen: equals the full-scan oracle and is non-decreasing") {
  Rng rng(62);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 1 + rng.next_below(40);
    const auto inst = random_instance(rng, n, true);
    const auto fast = nelson_aalen(inst.times, inst.events);
    const auto slow = oracle_nelson_aalen(inst.times, inst.events);
    REQUIRE(fast.knots().size() == slow.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < slow.size(); ++k) {
      CHECK(fast.knots()[k] == slow[k].time);
      CHECK(fast.values()[k] == doctest::Approx(slow[k].value).epsilon(1e-12));
      CHECK(fast.values()[k] >= prev);
      prev = fast.values()[k];
    }
  }
}

TEST_CASE("boxplot stats: hand examples") {
  {
    const auto s = boxplot_stats({0.5});
    CHECK(s.min == 0.5);
    CHECK(s.q1 == 0.5);
    CHECK(s.median == 0.5);
    CHECK(s.q3 == 0.5);
    CHECK(s.max == 0.5);
    CHECK(s.mean == 0.5);
  }
  {
    // Linear interpolation at rank p*(n-1): quartiles of {1,2,3,4} sit at
    // ranks 0.75 and 2.25.
    const auto s = boxplot_stats({4, 2, 1, 3});  // order must not matter
    CHECK(s.min == 1.0);
    CHECK(s.q1 == doctest::Approx(1.75));
    CHECK(s.median == doctest::Approx(2.5));
    CHECK(s.q3 == doctest::Approx(3.25));
    CHECK(s.max == 4.0);
    CHECK(s.mean == doctest::Approx(2.5));
  }
  {
    const auto s = boxplot_stats({1, 2, 3, 4, 5});
    CHECK(s.q1 == doctest::Approx(2.0));
    CHECK(s.median == doctest::Approx(3.0));
    CHECK(s.q3 == doctest::Approx(4.0));
  }
  CHECK_THROWS_AS(boxplot_stats({}), input_error);
}

TEST_CASE("boxplot stats: agrees with an independent quantile routine") {
  Rng rng(63);
  auto quantile = [](std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double rank = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    const double w = rank - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[hi] * w;
  };
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 1 + rng.next_below(60);
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.next_normal());
    const auto s = boxplot_stats(v);
    CHECK(s.q1 == doctest::Approx(quantile(v, 0.25)).epsilon(1e-12));
    CHECK(s.median == doctest::Approx(quantile(v, 0.5)).epsilon(1e-12));
    CHECK(s.q3 == doctest::Approx(quantile(v, 0.75)).epsilon(1e-12));
    CHECK(s.min == *std::min_element(v.begin(), v.end()));
    CHECK(s.max == *std::max_element(v.begin(), v.end()));
  }
}
