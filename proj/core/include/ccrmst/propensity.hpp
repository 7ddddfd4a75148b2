#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccrmst/types.hpp"

namespace ccrmst {

struct LogisticFit {
  Eigen::VectorXd coefficients;  // intercept first, then one slope per column
  bool converged = false;
  bool separation_flag = false;
  int iterations = 0;
  double max_weighted_gradient = 0.0;
};

// Maximizer of sum_i w_i [y_i log p_i + (1-y_i) log(1-p_i)] by iteratively
// reweighted least squares. design holds the covariate columns; the
// intercept is added internally. Convergence is a weighted score max-norm
// below tol. Perfect separation is flagged, never silently returned as a
// converged fit; a rank-deficient design throws naming the first dependent
// column. ridge adds an L2 penalty on the normal equations and is meant
// purely for numerical conditioning.
LogisticFit fit_weighted_logistic(const Eigen::VectorXd& y, const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& weights, double ridge = 0.0,
                                  double tol = 1e-8, int max_iterations = 100);

// Overflow-safe expit of the fit's linear predictor at x (without intercept).
double predict_propensity(const LogisticFit& fit, const Eigen::VectorXd& x);

double expit_stable(double z);

// phi corrects the matched-control risk set for case-cohort selection:
// phi = E(delta | .) + [1 - E(delta | .)] / alpha, the expected sampling
// weight of a matched unexposed subject. The event-probability model is an
// unweighted logistic regression on the matched unexposed subjects, with
// either the propensity score or the covariates as predictors.
enum class PhiPredictor { propensity, covariates };
enum class AlphaConvention { single, stratum };

struct PhiConfig {
  PhiPredictor predictor = PhiPredictor::propensity;
  AlphaConvention alpha_convention = AlphaConvention::stratum;
  std::vector<double> alpha;        // per-stratum
  double alpha_single = 1.0;        // pooled subcohort probability
  EventDefinition event_definition = EventDefinition::conventional;
  std::vector<int> covariate_indices;  // predictor columns; empty = all
};

struct PhiModel {
  PhiConfig config;
  LogisticFit event_model;       // E(delta | .) fit; unused when degenerate
  bool degenerate = false;       // all-0 or all-1 outcome: constant fit
  double constant_event_prob = 0.0;
  std::vector<std::string> warnings;

  // E(delta | subject); propensity_hat is the evaluation score when the
  // predictor is the propensity score.
  double event_prob(const Subject& s, double propensity_hat) const;
  // Sampling probability entering phi: the subject's stratum alpha or the
  // pooled value per the configured convention.
  double alpha_for(const Subject& s) const;
  // phi-hat for a matched unexposed subject; alpha comes from the subject's
  // stratum or the pooled value per the configured convention.
  double value(const Subject& s, double propensity_hat) const;
};

// Fits the event-probability model on matched unexposed subjects.
// propensity_hat must align with subjects when the predictor is the
// propensity score (it may be empty otherwise).
PhiModel fit_phi(const std::vector<Subject>& matched_unexposed,
                 const std::vector<double>& propensity_hat, const PhiConfig& config);

}  // namespace ccrmst
