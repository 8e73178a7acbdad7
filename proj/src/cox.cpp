#include "hazard/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hazard/error.hpp"

namespace hazard {

namespace {

// Ascending-time ordering with tied-time group boundaries, built once per
// dataset and reused across likelihood evaluations.
struct TimeOrder {
  std::vector<std::size_t> order;        // sample indices, time ascending
  std::vector<std::size_t> group_begin;  // positions in `order`, one per distinct time
  std::vector<std::size_t> group_end;

  TimeOrder(const std::vector<double>& time,
            const std::vector<std::uint8_t>& event) {
    const std::size_t n = time.size();
    if (n == 0 || event.size() != n)
      throw input_error("cox: empty data or length mismatch");
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return time[a] < time[b];
    });
    std::size_t g = 0;
    while (g < n) {
      std::size_t e = g;
      while (e < n && time[order[e]] == time[order[g]]) ++e;
      group_begin.push_back(g);
      group_end.push_back(e);
      g = e;
    }
  }
};

// One evaluation of the Efron partial likelihood at linear predictors eta.
// Always fills loglik and the per-subject score; fills the coefficient-space
// gradient and Hessian when a design matrix is supplied.
struct EfronEval {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

EfronEval efron_evaluate(const Eigen::VectorXd& eta,
                         const std::vector<std::uint8_t>& event,
                         const TimeOrder& ord, const Eigen::MatrixXd* x) {
  const std::size_t n = static_cast<std::size_t>(eta.size());
  const bool with_hessian = x != nullptr;
  const Eigen::Index p = with_hessian ? x->cols() : 0;
  EfronEval out;
  out.score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (with_hessian) {
    out.grad = Eigen::VectorXd::Zero(p);
    out.hess = Eigen::MatrixXd::Zero(p, p);
  }

  // Shift eta for exp stability; shifts cancel between the event terms and
  // the log phi terms, and in every ratio.
  const double eta_max = eta.size() ? eta.maxCoeff() : 0.0;
  const Eigen::VectorXd w = (eta.array() - eta_max).exp();

  const std::size_t n_groups = ord.group_begin.size();
  std::vector<double> a_tilde(n_groups, 0.0);  // sum_l 1/phi per group
  std::vector<double> b_tilde(n_groups, 0.0);  // sum_l (l/d)/phi per group

  double suffix_w = 0.0;
  Eigen::VectorXd suffix_wx = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd suffix_wxx = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd death_wx(p), m(p);
  Eigen::MatrixXd death_wxx(p, p);

  for (std::size_t gi = n_groups; gi-- > 0;) {
    double death_w = 0.0;
    std::size_t deaths = 0;
    if (with_hessian) {
      death_wx.setZero();
      death_wxx.setZero();
    }

    for (std::size_t k = ord.group_begin[gi]; k < ord.group_end[gi]; ++k) {
      const auto j = static_cast<Eigen::Index>(ord.order[k]);
      const double wj = w(j);
      suffix_w += wj;
      if (with_hessian) {
        const auto xj = x->row(j);
        suffix_wx.noalias() += wj * xj.transpose();
        suffix_wxx.noalias() += wj * xj.transpose() * xj;
      }
      if (event[ord.order[k]]) {
        ++deaths;
        death_w += wj;
        out.loglik += eta(j) - eta_max;
        out.score(j) += 1.0;
        if (with_hessian) {
          const auto xj = x->row(j);
          death_wx.noalias() += wj * xj.transpose();
          death_wxx.noalias() += wj * xj.transpose() * xj;
          out.grad += xj.transpose();
        }
      }
    }

    const double d = static_cast<double>(deaths);
    for (std::size_t l = 0; l < deaths; ++l) {
      const double frac = static_cast<double>(l) / d;
      const double phi = suffix_w - frac * death_w;
      out.loglik -= std::log(phi);
      a_tilde[gi] += 1.0 / phi;
      b_tilde[gi] += frac / phi;
      if (with_hessian) {
        m.noalias() = suffix_wx - frac * death_wx;
        out.grad.noalias() -= m / phi;
        out.hess.noalias() += m * m.transpose() / (phi * phi);
        out.hess.noalias() -= (suffix_wxx - frac * death_wxx) / phi;
      }
    }
  }

  // Ascending pass: score_j = delta_j - w_j * (sum of a_tilde over event
  // times <= Y_j, minus j's own b_tilde share when j dies there).
  double a_cum = 0.0;
  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    a_cum += a_tilde[gi];
    for (std::size_t k = ord.group_begin[gi]; k < ord.group_end[gi]; ++k) {
      const auto j = static_cast<Eigen::Index>(ord.order[k]);
      const double own = event[ord.order[k]] ? b_tilde[gi] : 0.0;
      out.score(j) -= w(j) * (a_cum - own);
    }
  }
  return out;
}

CoxModel make_fitted(const SurvivalDataset& train, const Eigen::VectorXd& means,
                     const Eigen::MatrixXd& xc, const TimeOrder& ord,
                     const Eigen::VectorXd& beta, const CoxConvergence& conv) {
  // Breslow baseline cumulative hazard at the fitted coefficients.
  const Eigen::VectorXd eta = xc * beta;
  const double eta_max = eta.size() ? eta.maxCoeff() : 0.0;
  const Eigen::VectorXd w = (eta.array() - eta_max).exp();

  const std::size_t n_groups = ord.group_begin.size();
  std::vector<double> suffix_w(n_groups, 0.0);
  std::vector<std::size_t> deaths(n_groups, 0);
  double s = 0.0;
  for (std::size_t gi = n_groups; gi-- > 0;) {
    for (std::size_t k = ord.group_begin[gi]; k < ord.group_end[gi]; ++k) {
      s += w(static_cast<Eigen::Index>(ord.order[k]));
      deaths[gi] += train.event[ord.order[k]];
    }
    suffix_w[gi] = s;
  }
  std::vector<double> knots, values;
  double h0 = 0.0;
  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    if (deaths[gi] == 0) continue;
    h0 += static_cast<double>(deaths[gi]) / (suffix_w[gi] * std::exp(eta_max));
    knots.push_back(train.time[ord.order[ord.group_begin[gi]]]);
    values.push_back(h0);
  }
  return CoxModel(beta, means,
                  StepFunction(std::move(knots), std::move(values), 0.0), conv);
}

}  // namespace

CoxEtaResult cox_loglik_eta(const Eigen::VectorXd& eta,
                            const std::vector<double>& time,
                            const std::vector<std::uint8_t>& event) {
  if (static_cast<std::size_t>(eta.size()) != time.size())
    throw input_error("cox: eta length mismatch");
  TimeOrder ord(time, event);
  EfronEval ev = efron_evaluate(eta, event, ord, nullptr);
  return {ev.loglik, std::move(ev.score)};
}

std::pair<double, Eigen::VectorXd> cox_partial_loglik_and_gradient(
    const Eigen::VectorXd& beta, const SurvivalDataset& train) {
  if (beta.size() != train.x.cols())
    throw input_error("cox: coefficient dimension mismatch");
  const Eigen::VectorXd eta = train.x * beta;
  CoxEtaResult r = cox_loglik_eta(eta, train.time, train.event);
  return {r.loglik, train.x.transpose() * r.score};
}

CoxModel CoxModel::fit(const SurvivalDataset& train, const CoxOptions& options) {
  const Eigen::Index p = train.x.cols();
  if (train.n_events() == 0)
    throw input_error("cox fit needs at least one event");

  const Eigen::VectorXd means = train.x.colwise().mean();
  const Eigen::MatrixXd xc = train.x.rowwise() - means.transpose();
  TimeOrder ord(train.time, train.event);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  CoxConvergence conv;

  auto penalized = [&](double loglik, const Eigen::VectorXd& b) {
    return loglik - 0.5 * options.ridge * b.squaredNorm();
  };

  EfronEval ev = efron_evaluate(xc * beta, train.event, ord, &xc);
  double ll = penalized(ev.loglik, beta);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd grad = ev.grad - options.ridge * beta;
    conv.grad_norm = p > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    conv.iterations = iter - 1;
    if (conv.grad_norm <= options.tolerance)
      return make_fitted(train, means, xc, ord, beta, conv);

    Eigen::MatrixXd a = -ev.hess;
    a.diagonal().array() += options.ridge;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (a(j, j) <= 1e-12) {
        const std::string fname =
            static_cast<std::size_t>(j) < train.feature_names.size()
                ? train.feature_names[static_cast<std::size_t>(j)]
                : ("column " + std::to_string(j));
        throw convergence_error(
            "cox: singular information matrix at feature '" + fname + "'");
      }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    Eigen::VectorXd direction = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !direction.allFinite())
      throw convergence_error("cox: Newton solve failed");

    bool improved = false;
    double step = 1.0;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      const Eigen::VectorXd cand = beta + step * direction;
      // Loglik-only trial; the full gradient/Hessian evaluation happens once,
      // at the accepted point.
      EfronEval trial = efron_evaluate(xc * cand, train.event, ord, nullptr);
      const double ll_new = penalized(trial.loglik, cand);
      if (std::isfinite(ll_new) && ll_new > ll) {
        beta = cand;
        ll = ll_new;
        improved = true;
        break;
      }
    }
    if (!improved) {
      // Step halving exhausted. If the Newton decrement is inside the
      // objective's rounding floor no step can be resolved as an improvement;
      // the iterate is converged at likelihood precision.
      conv.iterations = iter;
      conv.grad_norm = grad.cwiseAbs().maxCoeff();
      const double decrement = 0.5 * grad.dot(direction);
      const double floor = 1024.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(ll) + 1.0);
      if (decrement > floor)
        throw convergence_error("cox: no ascent direction, gradient norm " +
                                std::to_string(conv.grad_norm));
      return make_fitted(train, means, xc, ord, beta, conv);
    }
    ev = efron_evaluate(xc * beta, train.event, ord, &xc);

    if (beta.cwiseAbs().maxCoeff() > options.coef_cap) {
      // Monotone partial likelihood: some coefficient is running away.
      beta = beta.cwiseMax(-options.coef_cap).cwiseMin(options.coef_cap);
      conv.monotone_likelihood = true;
      conv.iterations = iter;
      ev = efron_evaluate(xc * beta, train.event, ord, &xc);
      conv.grad_norm = (ev.grad - options.ridge * beta).cwiseAbs().maxCoeff();
      return make_fitted(train, means, xc, ord, beta, conv);
    }
  }

  conv.iterations = options.max_iter;
  conv.grad_norm = (ev.grad - options.ridge * beta).cwiseAbs().maxCoeff();
  if (conv.grad_norm > 1e-6)
    throw convergence_error("cox: Newton did not converge, gradient norm " +
                            std::to_string(conv.grad_norm));
  return make_fitted(train, means, xc, ord, beta, conv);
}

double CoxModel::predict_risk(const Eigen::VectorXd& features) const {
  if (features.size() != beta_.size())
    throw input_error("cox predict: feature dimension mismatch");
  return (features - means_).dot(beta_);
}

std::vector<double> CoxModel::predict_risk(const SurvivalDataset& data) const {
  if (data.x.cols() != beta_.size())
    throw input_error("cox predict: feature dimension mismatch");
  const Eigen::VectorXd r = (data.x.rowwise() - means_.transpose()) * beta_;
  return std::vector<double>(r.data(), r.data() + r.size());
}

StepFunction CoxModel::predict_survival(const Eigen::VectorXd& features) const {
  const double rel = std::exp(predict_risk(features));
  std::vector<double> values(baseline_.values().size());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::exp(-baseline_.values()[i] * rel);
  return StepFunction(baseline_.knots(), std::move(values), 1.0);
}

}  // namespace hazard
