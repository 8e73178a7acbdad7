#include "hazard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "hazard/error.hpp"

namespace hazard {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw input_error("metrics: input length mismatch");
  if (a == 0) throw input_error("metrics: empty input");
}

// Fenwick tree of counts over risk ranks.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank) {  // rank in [1, n]
    for (std::size_t i = rank; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  std::uint64_t prefix(std::size_t rank) const {  // count of entries <= rank
    std::uint64_t s = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> eligible_pairs(
    const std::vector<double>& times, const std::vector<std::uint8_t>& events) {
  check_lengths(times.size(), events.size());
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t n = times.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (times[i] == times[j]) {
        if (events[i] || events[j]) pairs.emplace_back(i, j);
      } else {
        const std::size_t earlier = times[i] < times[j] ? i : j;
        if (events[earlier]) pairs.emplace_back(i, j);
      }
    }
  }
  return pairs;
}

ConcordanceResult concordance_index(const std::vector<double>& times,
                                    const std::vector<std::uint8_t>& events,
                                    const std::vector<double>& risks) {
  check_lengths(times.size(), events.size());
  check_lengths(times.size(), risks.size());
  for (double r : risks)
    if (!std::isfinite(r))
      throw input_error("concordance: non-finite risk score");
  const std::size_t n = times.size();

  // Scores live in {0, 0.5, 1}: count numerator and denominator in integer
  // half-units so the totals are exact and order-independent.
  std::uint64_t score_units = 0;  // 2 per concordant pair, 1 per half
  std::uint64_t pair_count = 0;

  // Risk ranks for the Fenwick tree, 1-based over sorted unique risks.
  std::vector<double> unique_risks(risks);
  std::sort(unique_risks.begin(), unique_risks.end());
  unique_risks.erase(std::unique(unique_risks.begin(), unique_risks.end()),
                     unique_risks.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i)
    rank[i] = static_cast<std::size_t>(
                  std::lower_bound(unique_risks.begin(), unique_risks.end(),
                                   risks[i]) -
                  unique_risks.begin()) +
              1;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] < times[b];
  });

  // Ascending time sweep. The tree holds event subjects with strictly
  // earlier times; each forms an eligible pair with every later subject.
  Fenwick tree(unique_risks.size());
  std::uint64_t events_inserted = 0;
  std::size_t g = 0;
  while (g < n) {
    std::size_t g_end = g;
    while (g_end < n && times[order[g_end]] == times[order[g]]) ++g_end;

    for (std::size_t k = g; k < g_end; ++k) {
      const std::size_t j = order[k];
      if (events_inserted > 0) {
        const std::uint64_t le = tree.prefix(rank[j]);
        const std::uint64_t eq = le - tree.prefix(rank[j] - 1);
        const std::uint64_t gt = events_inserted - le;
        score_units += 2 * gt + eq;
        pair_count += events_inserted;
      }
    }

    // Tied-time pairs within the group; groups are small, O(g^2) is fine.
    for (std::size_t a = g; a < g_end; ++a) {
      for (std::size_t b = a + 1; b < g_end; ++b) {
        const std::size_t i = order[a];
        const std::size_t j = order[b];
        if (events[i] && events[j]) {
          score_units += (risks[i] == risks[j]) ? 2 : 1;
          ++pair_count;
        } else if (events[i] || events[j]) {
          const std::size_t ev = events[i] ? i : j;
          const std::size_t ce = events[i] ? j : i;
          score_units += (risks[ev] > risks[ce]) ? 2 : 1;
          ++pair_count;
        }
      }
    }

    for (std::size_t k = g; k < g_end; ++k) {
      if (events[order[k]]) {
        tree.add(rank[order[k]]);
        ++events_inserted;
      }
    }
    g = g_end;
  }

  if (pair_count == 0)
    throw input_error("concordance_index: no eligible pairs (undefined)");

  ConcordanceResult result;
  result.n_pairs = pair_count;
  result.score_sum = static_cast<double>(score_units) * 0.5;
  result.index =
      static_cast<double>(score_units) / (2.0 * static_cast<double>(pair_count));
  return result;
}

namespace {

// Shared sweep for Kaplan-Meier and Nelson-Aalen: visits distinct times in
// ascending order with the number at risk and the number of events there.
template <typename F>
void risk_sweep(const std::vector<double>& times,
                const std::vector<std::uint8_t>& events, F&& visit) {
  const std::size_t n = times.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return times[a] < times[b];
  });
  std::size_t at_risk = n;
  std::size_t g = 0;
  while (g < n) {
    std::size_t g_end = g;
    std::size_t deaths = 0;
    while (g_end < n && times[order[g_end]] == times[order[g]]) {
      deaths += events[order[g_end]];
      ++g_end;
    }
    visit(times[order[g]], deaths, at_risk);
    at_risk -= g_end - g;
    g = g_end;
  }
}

}  // namespace

StepFunction kaplan_meier(const std::vector<double>& times,
                          const std::vector<std::uint8_t>& events) {
  check_lengths(times.size(), events.size());
  for (double t : times)
    if (!(t > 0)) throw input_error("kaplan_meier: times must be positive");
  std::vector<double> knots, values;
  double s = 1.0;
  risk_sweep(times, events, [&](double t, std::size_t d, std::size_t r) {
    if (d == 0) return;
    s *= 1.0 - static_cast<double>(d) / static_cast<double>(r);
    knots.push_back(t);
    values.push_back(s);
  });
  return StepFunction(std::move(knots), std::move(values), 1.0);
}

StepFunction nelson_aalen(const std::vector<double>& times,
                          const std::vector<std::uint8_t>& events) {
  check_lengths(times.size(), events.size());
  for (double t : times)
    if (!(t > 0)) throw input_error("nelson_aalen: times must be positive");
  std::vector<double> knots, values;
  double h = 0.0;
  risk_sweep(times, events, [&](double t, std::size_t d, std::size_t r) {
    if (d == 0) return;
    h += static_cast<double>(d) / static_cast<double>(r);
    knots.push_back(t);
    values.push_back(h);
  });
  return StepFunction(std::move(knots), std::move(values), 0.0);
}

BoxplotStats boxplot_stats(std::vector<double> values) {
  if (values.empty()) throw input_error("boxplot_stats: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  BoxplotStats s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(n);
  return s;
}

}  // namespace hazard
