#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hazard/step_function.hpp"
#include "hazard/types.hpp"

namespace hazard {

struct AalenOptions {
  // Ridge on each per-event-time least-squares solve, relative to the mean
  // diagonal of the at-risk Gram matrix (so it is scale-free).
  double ridge_rel = 1e-6;
  // Horizon at which risk scores are read; <= 0 means the last training
  // event time.
  double risk_eval_time = 0.0;
};

// Additive hazard model; the hazard is b_0(t) + sum_i b_i(t) x_i and the
// estimate consists of cumulative coefficients B(t), one step function per
// covariate plus the intercept, all sharing the training event times as
// knots.
class AalenModel {
 public:
  static AalenModel fit(const SurvivalDataset& train, const AalenOptions& options = {});

  // B_0(tau) + sum_i B_i(tau) x_i at the model's risk horizon.
  double predict_risk(const Eigen::VectorXd& features) const;
  std::vector<double> predict_risk(const SurvivalDataset& data) const;

  // Intercept first, then one per covariate.
  const std::vector<StepFunction>& cumulative_coeffs() const { return cum_; }
  double risk_eval_time() const { return tau_; }

  AalenModel() = default;
  AalenModel(std::vector<StepFunction> cum, double tau);

 private:
  std::vector<StepFunction> cum_;
  double tau_ = 0.0;
  Eigen::VectorXd coef_at_tau_;  // cached B(tau), intercept first
};

}  // namespace hazard
