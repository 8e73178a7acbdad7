#include "hazard/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hazard/error.hpp"

namespace hazard {

namespace {

// theta = (b0, coefficients..., s) with s = log rho. With u_i = b0 + b.x_i
// and z_i = rho (log t_i - u_i), w_i = e^{z_i}:
//   loglik = sum_i  delta_i (s - log t_i + z_i) - w_i
//   d/du_i = rho (w_i - delta_i)
//   d/ds   = sum_i delta_i + z_i (delta_i - w_i)
// Second derivatives follow the same pattern; all are accumulated per row.
struct WeibullEval {
  double loglik = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

WeibullEval weibull_evaluate(const Eigen::VectorXd& theta,
                             const SurvivalDataset& data, bool with_hessian) {
  const Eigen::Index p = data.x.cols();
  const Eigen::Index q = p + 2;
  if (theta.size() != q) throw input_error("weibull: parameter size mismatch");
  const double b0 = theta(0);
  const auto b = theta.segment(1, p);
  const double s = theta(q - 1);
  const double rho = std::exp(s);

  WeibullEval out;
  out.grad = Eigen::VectorXd::Zero(q);
  if (with_hessian) out.hess = Eigen::MatrixXd::Zero(q, q);

  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto xi = data.x.row(static_cast<Eigen::Index>(i));
    const double t = data.time[i];
    if (!(t > 0)) throw input_error("weibull: nonpositive time");
    const double delta = data.event[i] ? 1.0 : 0.0;
    const double u = b0 + xi.dot(b.transpose());
    const double z = rho * (std::log(t) - u);
    const double w = std::exp(z);

    out.loglik += delta * (s - std::log(t) + z) - w;

    const double du = rho * (w - delta);
    out.grad(0) += du;
    out.grad.segment(1, p).noalias() += du * xi.transpose();
    out.grad(q - 1) += delta + z * (delta - w);

    if (with_hessian) {
      // d2/du2 = -rho^2 w ; d2/du ds = rho (w - delta + w z) ;
      // d2/ds2 = z (delta - w) - z^2 w.
      const double huu = -rho * rho * w;
      const double hus = rho * (w - delta + w * z);
      const double hss = z * (delta - w) - z * z * w;
      out.hess(0, 0) += huu;
      out.hess.block(1, 0, p, 1).noalias() += huu * xi.transpose();
      out.hess.block(1, 1, p, p).noalias() +=
          huu * xi.transpose() * xi;
      out.hess(q - 1, 0) += hus;
      out.hess.block(q - 1, 1, 1, p).noalias() += hus * xi;
      out.hess(q - 1, q - 1) += hss;
    }
  }
  if (with_hessian) {
    out.hess.triangularView<Eigen::StrictlyUpper>() =
        out.hess.transpose().triangularView<Eigen::StrictlyUpper>();
  }
  return out;
}

}  // namespace

std::pair<double, Eigen::VectorXd> weibull_loglik_and_gradient(
    const Eigen::VectorXd& theta, const SurvivalDataset& train) {
  WeibullEval ev = weibull_evaluate(theta, train, false);
  return {ev.loglik, std::move(ev.grad)};
}

WeibullAftModel::WeibullAftModel(double intercept, Eigen::VectorXd coef,
                                 double shape)
    : intercept_(intercept), coef_(std::move(coef)), shape_(shape) {
  if (!(shape_ > 0)) throw internal_error("weibull: shape must be positive");
}

WeibullAftModel WeibullAftModel::fit(const SurvivalDataset& train,
                                     const WeibullOptions& options) {
  const Eigen::Index p = train.x.cols();
  const Eigen::Index q = p + 2;
  if (train.n_events() < 2)
    throw input_error("weibull fit needs at least 2 events");

  // Start at the exponential fit with no covariate effect: rho = 1 and
  // lambda = total time / events (its closed-form MLE).
  double total_time = 0.0;
  for (double t : train.time) {
    if (!(t > 0)) throw input_error("weibull: nonpositive time");
    total_time += t;
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(q);
  theta(0) = std::log(total_time / static_cast<double>(train.n_events()));

  WeibullEval ev = weibull_evaluate(theta, train, true);
  double ll = ev.loglik;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const double grad_norm = ev.grad.cwiseAbs().maxCoeff();
    if (grad_norm <= options.tolerance) {
      return WeibullAftModel(theta(0), theta.segment(1, p),
                             std::exp(theta(q - 1)));
    }

    // Damped Newton: escalate the damping until the solve succeeds and the
    // step improves the likelihood; step halving handles the rest.
    bool improved = false;
    double first_decrement = -1.0;  // expected gain of the least-damped step
    const double diag_scale = std::max(1.0, ev.hess.cwiseAbs().diagonal().maxCoeff());
    for (double damping = 0.0; damping <= 1e8 * diag_scale;
         damping = damping == 0.0 ? 1e-8 * diag_scale : damping * 100.0) {
      Eigen::MatrixXd a = -ev.hess;
      a.diagonal().array() += damping;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      if (ldlt.info() != Eigen::Success) continue;
      const Eigen::VectorXd direction = ldlt.solve(ev.grad);
      if (!direction.allFinite()) continue;
      if (direction.dot(ev.grad) <= 0) continue;  // not an ascent direction
      if (first_decrement < 0) first_decrement = 0.5 * direction.dot(ev.grad);

      double step = 1.0;
      for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
        const Eigen::VectorXd cand = theta + step * direction;
        WeibullEval trial = weibull_evaluate(cand, train, false);
        if (std::isfinite(trial.loglik) && trial.loglik > ll) {
          theta = cand;
          ll = trial.loglik;
          improved = true;
          break;
        }
      }
      if (improved) break;
    }
    if (!improved) {
      // Step halving exhausted everywhere. If even the least-damped Newton
      // step promises less than the objective's rounding floor, the iterate
      // is converged at likelihood precision.
      const double floor = 1024.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(ll) + 1.0);
      if (first_decrement >= 0 && first_decrement <= floor)
        return WeibullAftModel(theta(0), theta.segment(1, p),
                               std::exp(theta(q - 1)));
      throw convergence_error(
          "weibull: stalled at gradient norm " +
          std::to_string(ev.grad.cwiseAbs().maxCoeff()) + " after " +
          std::to_string(iter) + " iterations");
    }
    ev = weibull_evaluate(theta, train, true);
  }

  const double final_norm = ev.grad.cwiseAbs().maxCoeff();
  if (final_norm > 1e-6)
    throw convergence_error("weibull: did not converge, gradient norm " +
                            std::to_string(final_norm));
  return WeibullAftModel(theta(0), theta.segment(1, p), std::exp(theta(q - 1)));
}

double WeibullAftModel::predict_risk(const Eigen::VectorXd& features) const {
  if (features.size() != coef_.size())
    throw input_error("weibull predict: feature dimension mismatch");
  return -(intercept_ + coef_.dot(features));
}

std::vector<double> WeibullAftModel::predict_risk(
    const SurvivalDataset& data) const {
  if (data.x.cols() != coef_.size())
    throw input_error("weibull predict: feature dimension mismatch");
  const Eigen::VectorXd r = -((data.x * coef_).array() + intercept_);
  return std::vector<double>(r.data(), r.data() + r.size());
}

double WeibullAftModel::survival(double t,
                                 const Eigen::VectorXd& features) const {
  if (t <= 0) return 1.0;
  const double lambda = std::exp(intercept_ + coef_.dot(features));
  return std::exp(-std::pow(t / lambda, shape_));
}

double WeibullAftModel::median_time(const Eigen::VectorXd& features) const {
  const double lambda = std::exp(intercept_ + coef_.dot(features));
  return lambda * std::pow(std::log(2.0), 1.0 / shape_);
}

}  // namespace hazard
