#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "hazard/step_function.hpp"
#include "hazard/types.hpp"

namespace hazard {

struct CoxOptions {
  double tolerance = 1e-9;  // gradient max-norm
  int max_iter = 100;
  int max_halvings = 30;
  double ridge = 0.0;       // L2 penalty on coefficients
  double coef_cap = 20.0;   // monotone-likelihood guard
};

struct CoxConvergence {
  int iterations = 0;
  double grad_norm = 0.0;
  bool monotone_likelihood = false;
};

// Partial log-likelihood (Efron tie correction) and its derivative with
// respect to the per-subject linear predictors eta. The score vector is
// what boosting uses as pseudo-residuals.
struct CoxEtaResult {
  double loglik = 0.0;
  Eigen::VectorXd score;  // d loglik / d eta_j
};
CoxEtaResult cox_loglik_eta(const Eigen::VectorXd& eta,
                            const std::vector<double>& time,
                            const std::vector<std::uint8_t>& event);

// Same likelihood as a function of coefficients, eta = X beta, with its
// gradient in coefficient space. No centering, no penalty; this is the raw
// objective used by the finite-difference suites.
std::pair<double, Eigen::VectorXd> cox_partial_loglik_and_gradient(
    const Eigen::VectorXd& beta, const SurvivalDataset& train);

class CoxModel {
 public:
  // Covariates are centered at their training means internally; the fit
  // maximizes the Efron partial likelihood by Newton-Raphson with step
  // halving. Coefficients hitting the cap mark monotone likelihood; the
  // model is still returned with the flag set.
  static CoxModel fit(const SurvivalDataset& train, const CoxOptions& options = {});

  double predict_risk(const Eigen::VectorXd& features) const;
  std::vector<double> predict_risk(const SurvivalDataset& data) const;
  StepFunction predict_survival(const Eigen::VectorXd& features) const;

  const Eigen::VectorXd& coefficients() const { return beta_; }
  const Eigen::VectorXd& feature_means() const { return means_; }
  const StepFunction& baseline_cumhaz() const { return baseline_; }
  const CoxConvergence& convergence() const { return convergence_; }

  // Serialization support; also the deserializer's constructor.
  CoxModel() = default;
  CoxModel(Eigen::VectorXd beta, Eigen::VectorXd means, StepFunction baseline,
           CoxConvergence convergence)
      : beta_(std::move(beta)), means_(std::move(means)),
        baseline_(std::move(baseline)), convergence_(convergence) {}

 private:
  Eigen::VectorXd beta_;
  Eigen::VectorXd means_;
  StepFunction baseline_;
  CoxConvergence convergence_;
};

}  // namespace hazard
