#include "ccrmst/propensity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ccrmst {

double expit_stable(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

LogisticFit fit_weighted_logistic(const Eigen::VectorXd& y, const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& weights, double ridge, double tol,
                                  int max_iterations) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols() + 1;  // with intercept
  if (y.size() != n || weights.size() != n)
    throw std::invalid_argument("fit_weighted_logistic: size mismatch");

  bool any0 = false, any1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] < 0.0)
      throw std::invalid_argument("fit_weighted_logistic: negative weight");
    if (weights[i] > 0.0) {
      if (y[i] == 0.0) any0 = true;
      else if (y[i] == 1.0) any1 = true;
      else throw std::invalid_argument("fit_weighted_logistic: outcome must be 0 or 1");
    }
  }
  if (!any0 || !any1)
    throw std::invalid_argument(
        "fit_weighted_logistic: need both outcome levels with positive weight");

  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.rightCols(p - 1) = design;

  // Rank check on the weighted design; IRLS cannot recover from a
  // dependent column and the caller should hear which one it is.
  {
    Eigen::MatrixXd xw = weights.array().sqrt().matrix().asDiagonal() * x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      Eigen::Index bad = qr.colsPermutation().indices()[qr.rank()];
      std::string which = bad == 0 ? "intercept" : "column " + std::to_string(bad - 1);
      throw std::invalid_argument("fit_weighted_logistic: design is rank deficient (" + which +
                                  " is linearly dependent)");
    }
  }

  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta(n), prob(n), score(p);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    eta = x * beta;
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = expit_stable(eta[i]);
    score = x.transpose() * (weights.array() * (y - prob).array()).matrix();
    fit.iterations = iter;
    fit.max_weighted_gradient = score.lpNorm<Eigen::Infinity>();
    if (fit.max_weighted_gradient < tol) {
      fit.converged = true;
      break;
    }
    Eigen::VectorXd irls_w =
        (weights.array() * prob.array() * (1.0 - prob.array())).cwiseMax(1e-12);
    Eigen::MatrixXd hessian = x.transpose() * irls_w.asDiagonal() * x;
    if (ridge > 0.0) hessian.diagonal().array() += ridge;
    beta += hessian.ldlt().solve(score);
    if (!beta.allFinite())
      throw std::runtime_error("fit_weighted_logistic: diverged to non-finite coefficients");
  }
  fit.coefficients = beta;

  // Perfect separation drives the score to zero while every fitted
  // probability pins at its outcome; report it as non-convergence rather
  // than returning the diverging coefficients silently.
  double misfit_mass = 0.0, weight_mass = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    misfit_mass += weights[i] * (y[i] == 1.0 ? 1.0 - prob[i] : prob[i]);
    weight_mass += weights[i];
  }
  if (misfit_mass / weight_mass < 1e-8 || beta.lpNorm<Eigen::Infinity>() > 1e4) {
    fit.separation_flag = true;
    fit.converged = false;
  }
  return fit;
}

double predict_propensity(const LogisticFit& fit, const Eigen::VectorXd& x) {
  if (x.size() + 1 != fit.coefficients.size())
    throw std::invalid_argument("predict_propensity: dimension mismatch");
  double lp = fit.coefficients[0] + fit.coefficients.tail(x.size()).dot(x);
  // keep the score inside the open interval even when expit saturates
  double p = expit_stable(lp);
  p = std::min(p, std::nextafter(1.0, 0.0));
  return std::max(p, std::numeric_limits<double>::min());
}

namespace {
Eigen::VectorXd phi_predictor_row(const PhiConfig& cfg, const Subject& s,
                                  double propensity_hat) {
  if (cfg.predictor == PhiPredictor::propensity) {
    Eigen::VectorXd row(1);
    row[0] = propensity_hat;
    return row;
  }
  if (cfg.covariate_indices.empty()) {
    return Eigen::Map<const Eigen::VectorXd>(s.covariates.data(),
                                             static_cast<Eigen::Index>(s.covariates.size()));
  }
  Eigen::VectorXd row(static_cast<Eigen::Index>(cfg.covariate_indices.size()));
  for (std::size_t j = 0; j < cfg.covariate_indices.size(); ++j)
    row[static_cast<Eigen::Index>(j)] =
        s.covariates[static_cast<std::size_t>(cfg.covariate_indices[j])];
  return row;
}
}  // namespace

double PhiModel::event_prob(const Subject& s, double propensity_hat) const {
  if (degenerate) return constant_event_prob;
  return predict_propensity(event_model, phi_predictor_row(config, s, propensity_hat));
}

double PhiModel::alpha_for(const Subject& s) const {
  if (config.alpha_convention == AlphaConvention::single) return config.alpha_single;
  auto b = static_cast<std::size_t>(s.stratum - 1);
  if (b >= config.alpha.size())
    throw std::invalid_argument("phi: subject stratum has no sampling probability");
  return config.alpha[b];
}

double PhiModel::value(const Subject& s, double propensity_hat) const {
  double e = event_prob(s, propensity_hat);
  return e + (1.0 - e) / alpha_for(s);
}

PhiModel fit_phi(const std::vector<Subject>& matched_unexposed,
                 const std::vector<double>& propensity_hat, const PhiConfig& config) {
  if (matched_unexposed.empty()) throw std::invalid_argument("fit_phi: empty matched sample");
  if (config.predictor == PhiPredictor::propensity &&
      propensity_hat.size() != matched_unexposed.size())
    throw std::invalid_argument("fit_phi: propensity scores must align with subjects");

  PhiModel model;
  model.config = config;

  const auto n = static_cast<Eigen::Index>(matched_unexposed.size());
  Eigen::VectorXd y(n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = matched_unexposed[static_cast<std::size_t>(i)].event(config.event_definition);
    sum += y[i];
  }
  if (sum == 0.0 || sum == static_cast<double>(n)) {
    model.degenerate = true;
    model.constant_event_prob = sum / static_cast<double>(n);
    model.warnings.push_back("phi: event indicator is constant in the matched unexposed sample; "
                             "using the sample mean");
    return model;
  }

  Eigen::VectorXd first = phi_predictor_row(
      config, matched_unexposed.front(),
      config.predictor == PhiPredictor::propensity ? propensity_hat.front() : 0.0);
  Eigen::MatrixXd design(n, first.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    double ph = config.predictor == PhiPredictor::propensity
                    ? propensity_hat[static_cast<std::size_t>(i)]
                    : 0.0;
    design.row(i) = phi_predictor_row(config, matched_unexposed[static_cast<std::size_t>(i)], ph);
  }
  model.event_model =
      fit_weighted_logistic(y, design, Eigen::VectorXd::Ones(n));
  if (!model.event_model.converged)
    model.warnings.push_back(model.event_model.separation_flag
                                 ? "phi: event model shows separation; fit flagged"
                                 : "phi: event model did not converge");
  return model;
}

}  // namespace ccrmst
