#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hazard/step_function.hpp"

namespace hazard {

struct ConcordanceResult {
  double index = 0.0;
  std::uint64_t n_pairs = 0;  // |P|, count of eligible pairs
  double score_sum = 0.0;     // sum of per-pair scores in {0, 0.5, 1}
};

// The pairs (i, j), i < j, that enter the concordance index: pairs with
// distinct times where the earlier-time member has an event, plus tied-time
// pairs with at least one event.
std::vector<std::pair<std::size_t, std::size_t>> eligible_pairs(
    const std::vector<double>& times, const std::vector<std::uint8_t>& events);

// Harrell's concordance index. Per eligible pair: distinct times score 1 if
// the earlier subject has strictly higher risk, 0.5 on a risk tie, else 0;
// tied times with two events score 1 on a risk tie, else 0.5; tied times
// with one event score 1 if the event subject has strictly higher risk,
// else 0.5. Risk ties are exact floating-point equality. All scores are
// half-integers, so the sums are accumulated in integer half-units and the
// result is independent of evaluation order. Throws input_error when no
// pair is eligible.
ConcordanceResult concordance_index(const std::vector<double>& times,
                                    const std::vector<std::uint8_t>& events,
                                    const std::vector<double>& risks);

// Product-limit survival estimate. Knots at distinct event times.
StepFunction kaplan_meier(const std::vector<double>& times,
                          const std::vector<std::uint8_t>& events);

// Nelson-Aalen cumulative hazard, the forest leaf estimate.
StepFunction nelson_aalen(const std::vector<double>& times,
                          const std::vector<std::uint8_t>& events);

struct BoxplotStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

// Quantiles by linear interpolation at rank p*(n-1) over the sorted values
// (so the median of an even-sized list is the midpoint of the two central
// values). Throws input_error on empty input.
BoxplotStats boxplot_stats(std::vector<double> values);

}  // namespace hazard
