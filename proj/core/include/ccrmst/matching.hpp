#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccrmst/types.hpp"

namespace ccrmst {

enum class DistanceKind { propensity_euclidean, mahalanobis };

// Distance metric for matching. For Mahalanobis matching, covariance is the
// weighted case-cohort covariance of the matching covariates; a diagonal
// ridge of 1e-8 * trace/p is added when it is numerically singular, and
// ridge_applied reports that.
struct DistanceSpec {
  DistanceKind kind = DistanceKind::propensity_euclidean;
  Eigen::MatrixXd covariance;
  std::vector<int> covariate_indices;
  bool ridge_applied = false;
};

// rho-weighted covariance with weighted-mean centering and (sum rho - 1)
// denominator; reduces to the usual n-1 sample covariance at unit weights.
Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& rho);

double mahalanobis(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                   const Eigen::MatrixXd& sigma);

// Builds a Mahalanobis DistanceSpec from a case-cohort sample, conditioning
// the covariance if needed. covariate_indices selects the matching columns
// (empty = all).
DistanceSpec make_mahalanobis_spec(const std::vector<Subject>& sample,
                                   std::vector<int> covariate_indices = {});

DistanceSpec make_propensity_spec();

// Feature rows in which matching distance is plain Euclidean: the propensity
// score as a single column, or covariates whitened by the covariance's
// Cholesky factor. propensity_hat is required only for propensity specs.
Eigen::MatrixXd matching_features(const std::vector<Subject>& subjects,
                                  const std::vector<double>& propensity_hat,
                                  const DistanceSpec& spec);

// n_candidates random m-subsets (without replacement within a subset) of
// {0..n_exposed-1}.
std::vector<std::vector<int>> draw_templates(int n_exposed, int m, int n_candidates,
                                             std::uint64_t seed);

// Index of the candidate with the smallest total pairwise distance to the
// full exposed group; ties break toward the lowest candidate index.
// exposed_features holds one row per exposed subject.
int select_template(const std::vector<std::vector<int>>& candidates,
                    const Eigen::MatrixXd& exposed_features);

struct MatchedPair {
  Subject exposed;
  Subject unexposed;
  double exposed_propensity = std::numeric_limits<double>::quiet_NaN();
  double unexposed_propensity = std::numeric_limits<double>::quiet_NaN();
};

// m exposed/unexposed pairs from one-to-one matching without replacement.
struct MatchedPairSet {
  std::vector<MatchedPair> pairs;
  DistanceSpec distance;
  int template_id = -1;  // winning candidate index; -1 when no template
  double total_within_pair_distance = 0.0;

  std::vector<Subject> unexposed_subjects() const;
  std::vector<double> unexposed_propensities() const;
};

// Exact one-to-one optimal matching of unexposed subjects to the template:
// minimizes the total within-pair distance over all injective assignments.
// template_features/unexposed_features are rows in matching-feature space;
// propensity vectors may be empty for covariate matching.
MatchedPairSet optimal_match(const std::vector<Subject>& exposed_template,
                             const std::vector<Subject>& unexposed,
                             const Eigen::MatrixXd& template_features,
                             const Eigen::MatrixXd& unexposed_features,
                             const DistanceSpec& spec,
                             const std::vector<double>& template_propensity = {},
                             const std::vector<double>& unexposed_propensity = {});

struct BalanceRow {
  std::string covariate;
  std::string stage;
  std::string metric;  // "smd" or "prop_diff"
  double value = 0.0;
  bool undefined = false;
};

// Standardized mean differences (continuous) and proportion differences
// (binary) between exposure groups. pooled_sd must come from the case-cohort
// sample so the denominator is common across stages; binary columns are
// detected by their values. Zero pooled SD with equal means reports 0,
// otherwise the row is flagged undefined.
std::vector<BalanceRow> balance_report(const Eigen::MatrixXd& exposed_covariates,
                                       const Eigen::MatrixXd& unexposed_covariates,
                                       const Eigen::VectorXd& pooled_sd,
                                       const std::vector<std::string>& names,
                                       const std::string& stage);

// Pooled standard deviation per covariate over the two exposure groups of
// the case-cohort sample: sqrt(((n1-1)s1^2 + (n0-1)s0^2) / (n1+n0-2)).
Eigen::VectorXd pooled_sd(const Eigen::MatrixXd& exposed_covariates,
                          const Eigen::MatrixXd& unexposed_covariates);

Eigen::MatrixXd covariate_matrix(const std::vector<Subject>& subjects);

}  // namespace ccrmst
