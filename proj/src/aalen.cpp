#include "hazard/aalen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hazard/error.hpp"

namespace hazard {

AalenModel::AalenModel(std::vector<StepFunction> cum, double tau)
    : cum_(std::move(cum)), tau_(tau) {
  coef_at_tau_.resize(static_cast<Eigen::Index>(cum_.size()));
  for (std::size_t j = 0; j < cum_.size(); ++j)
    coef_at_tau_(static_cast<Eigen::Index>(j)) = cum_[j](tau_);
}

AalenModel AalenModel::fit(const SurvivalDataset& train,
                           const AalenOptions& options) {
  const std::size_t n = train.n();
  const Eigen::Index q = train.x.cols() + 1;  // intercept plus covariates
  if (train.n_events() == 0)
    throw input_error("aalen fit needs at least 1 event");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return train.time[a] < train.time[b];
  });

  // Design rows z = [1, x]; the at-risk Gram matrix starts with everyone
  // and is downdated as subjects leave, ascending in time.
  auto design_row = [&](std::size_t i) {
    Eigen::VectorXd z(q);
    z(0) = 1.0;
    z.tail(q - 1) = train.x.row(static_cast<Eigen::Index>(i)).transpose();
    return z;
  };
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd z = design_row(i);
    gram.noalias() += z * z.transpose();
  }

  std::vector<double> knots;
  std::vector<Eigen::VectorXd> cum_values;
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(q);

  std::size_t g = 0;
  while (g < n) {
    std::size_t g_end = g;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);
    std::size_t deaths = 0;
    while (g_end < n && train.time[order[g_end]] == train.time[order[g]]) {
      if (train.event[order[g_end]]) {
        rhs.noalias() += design_row(order[g_end]);
        ++deaths;
      }
      ++g_end;
    }
    if (deaths > 0) {
      Eigen::MatrixXd a = gram;
      const double ridge =
          options.ridge_rel * a.diagonal().mean() + 1e-300;
      a.diagonal().array() += ridge;
      cum.noalias() += a.ldlt().solve(rhs);
      knots.push_back(train.time[order[g]]);
      cum_values.push_back(cum);
    }
    for (std::size_t k = g; k < g_end; ++k) {
      const Eigen::VectorXd z = design_row(order[k]);
      gram.noalias() -= z * z.transpose();
    }
    g = g_end;
  }

  std::vector<StepFunction> cum_fns;
  for (Eigen::Index j = 0; j < q; ++j) {
    std::vector<double> vals(knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k)
      vals[k] = cum_values[k](j);
    cum_fns.emplace_back(knots, std::move(vals), 0.0);
  }
  const double tau =
      options.risk_eval_time > 0 ? options.risk_eval_time : knots.back();
  return AalenModel(std::move(cum_fns), tau);
}

double AalenModel::predict_risk(const Eigen::VectorXd& features) const {
  if (features.size() + 1 != coef_at_tau_.size())
    throw input_error("aalen predict: feature dimension mismatch");
  return coef_at_tau_(0) + coef_at_tau_.tail(features.size()).dot(features);
}

std::vector<double> AalenModel::predict_risk(const SurvivalDataset& data) const {
  if (data.x.cols() + 1 != coef_at_tau_.size())
    throw input_error("aalen predict: feature dimension mismatch");
  const Eigen::VectorXd r =
      (data.x * coef_at_tau_.tail(coef_at_tau_.size() - 1)).array() +
      coef_at_tau_(0);
  return std::vector<double>(r.data(), r.data() + r.size());
}

}  // namespace hazard
