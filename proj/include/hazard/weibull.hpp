#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hazard/types.hpp"

namespace hazard {

struct WeibullOptions {
  double tolerance = 1e-9;  // gradient max-norm
  int max_iter = 100;
  int max_halvings = 30;
};

// Accelerated failure time model with S(t|x) = exp(-(t/lambda(x))^rho) and
// lambda(x) = exp(b0 + sum_i b_i x_i). Censored maximum likelihood by
// Newton over (b0, b, log rho).
class WeibullAftModel {
 public:
  static WeibullAftModel fit(const SurvivalDataset& train,
                             const WeibullOptions& options = {});

  // -log lambda(x): larger when the time scale contracts, i.e. riskier.
  double predict_risk(const Eigen::VectorXd& features) const;
  std::vector<double> predict_risk(const SurvivalDataset& data) const;

  double survival(double t, const Eigen::VectorXd& features) const;
  double median_time(const Eigen::VectorXd& features) const;

  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coefficients() const { return coef_; }
  double shape() const { return shape_; }

  WeibullAftModel() = default;
  WeibullAftModel(double intercept, Eigen::VectorXd coef, double shape);

 private:
  double intercept_ = 0.0;
  Eigen::VectorXd coef_;
  double shape_ = 1.0;  // rho > 0
};

// Censored Weibull log-likelihood and gradient in theta = (b0, b, log rho),
// exposed for the finite-difference suites.
std::pair<double, Eigen::VectorXd> weibull_loglik_and_gradient(
    const Eigen::VectorXd& theta, const SurvivalDataset& train);

}  // namespace hazard
