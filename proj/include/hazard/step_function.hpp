#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "hazard/error.hpp"

namespace hazard {

// Right-continuous step function: value(t) = initial for t < knot[0],
// values[i] for knot[i] <= t < knot[i+1]. Knots strictly increasing.
// This is the shape of every estimated curve in the project (cumulative
// hazards, survival curves, cumulative regression coefficients).
class StepFunction {
 public:
  StepFunction() : initial_(0.0) {}

  StepFunction(std::vector<double> knots, std::vector<double> values,
               double initial = 0.0)
      : knots_(std::move(knots)), values_(std::move(values)),
        initial_(initial) {
    if (knots_.size() != values_.size())
      throw internal_error("StepFunction: knots/values size mismatch");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i - 1] < knots_[i]))
        throw internal_error("StepFunction: knots not strictly increasing");
  }

  double operator()(double t) const {
    // Index of last knot <= t.
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return initial_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  // Riemann integral over [0, tau] (exact for a step function). Knots at
  // negative times are not used by any estimator; times start at 0.
  double integrate(double tau) const {
    if (tau <= 0.0) return 0.0;
    double area = 0.0;
    double prev_t = 0.0;
    double prev_v = initial_;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      const double t = std::min(knots_[i], tau);
      if (t > prev_t) area += prev_v * (t - prev_t);
      if (knots_[i] >= tau) return area;
      prev_t = std::max(knots_[i], 0.0);
      prev_v = values_[i];
    }
    if (tau > prev_t) area += prev_v * (tau - prev_t);
    return area;
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double initial() const { return initial_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double initial_;
};

}  // namespace hazard
