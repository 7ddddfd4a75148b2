#include "ccrmst/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ccrmst/assignment.hpp"
#include "ccrmst/rng.hpp"

namespace ccrmst {

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& rho) {
  if (x.rows() != rho.size())
    throw std::invalid_argument("weighted_covariance: size mismatch");
  double weight_sum = rho.sum();
  if (!(weight_sum > 1.0))
    throw std::domain_error("weighted_covariance: weights must sum to more than 1");
  Eigen::RowVectorXd mean = (rho.transpose() * x) / weight_sum;
  Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd sigma =
      centered.transpose() * rho.asDiagonal() * centered / (weight_sum - 1.0);
  return 0.5 * (sigma + sigma.transpose());  // enforce exact symmetry
}

double mahalanobis(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                   const Eigen::MatrixXd& sigma) {
  if (x1.size() != x2.size() || sigma.rows() != x1.size() || sigma.cols() != x1.size())
    throw std::invalid_argument("mahalanobis: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("mahalanobis: covariance is not positive definite");
  Eigen::VectorXd diff = x1 - x2;
  return std::sqrt(diff.dot(llt.solve(diff)));
}

Eigen::MatrixXd covariate_matrix(const std::vector<Subject>& subjects) {
  if (subjects.empty()) return {};
  const auto p = static_cast<Eigen::Index>(subjects.front().covariates.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(subjects.size()), p);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (static_cast<Eigen::Index>(subjects[i].covariates.size()) != p)
      throw std::invalid_argument("covariate_matrix: ragged covariate vectors");
    for (Eigen::Index j = 0; j < p; ++j)
      x(static_cast<Eigen::Index>(i), j) = subjects[i].covariates[static_cast<std::size_t>(j)];
  }
  return x;
}

namespace {
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<int>& indices) {
  if (indices.empty()) return x;
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = x.col(indices[j]);
  return out;
}
}  // namespace

DistanceSpec make_mahalanobis_spec(const std::vector<Subject>& sample,
                                   std::vector<int> covariate_indices) {
  DistanceSpec spec;
  spec.kind = DistanceKind::mahalanobis;
  spec.covariate_indices = std::move(covariate_indices);
  Eigen::MatrixXd x = select_columns(covariate_matrix(sample), spec.covariate_indices);
  Eigen::VectorXd rho(static_cast<Eigen::Index>(sample.size()));
  for (std::size_t i = 0; i < sample.size(); ++i)
    rho[static_cast<Eigen::Index>(i)] = sample[i].weight;
  spec.covariance = weighted_covariance(x, rho);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.covariance);
  if (eig.eigenvalues().minCoeff() <= 1e-10) {
    double ridge = 1e-8 * spec.covariance.trace() / static_cast<double>(spec.covariance.rows());
    spec.covariance.diagonal().array() += ridge;
    spec.ridge_applied = true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> recheck(spec.covariance);
    if (recheck.eigenvalues().minCoeff() <= 0.0)
      throw std::runtime_error("make_mahalanobis_spec: covariance singular even after ridge");
  }
  return spec;
}

DistanceSpec make_propensity_spec() {
  DistanceSpec spec;
  spec.kind = DistanceKind::propensity_euclidean;
  return spec;
}

Eigen::MatrixXd matching_features(const std::vector<Subject>& subjects,
                                  const std::vector<double>& propensity_hat,
                                  const DistanceSpec& spec) {
  if (spec.kind == DistanceKind::propensity_euclidean) {
    if (propensity_hat.size() != subjects.size())
      throw std::invalid_argument("matching_features: propensity scores required");
    Eigen::MatrixXd f(static_cast<Eigen::Index>(subjects.size()), 1);
    for (std::size_t i = 0; i < subjects.size(); ++i)
      f(static_cast<Eigen::Index>(i), 0) = propensity_hat[i];
    return f;
  }
  // Whiten with the Cholesky factor so Euclidean distance in feature space
  // equals Mahalanobis distance in covariate space.
  Eigen::MatrixXd x = select_columns(covariate_matrix(subjects), spec.covariate_indices);
  Eigen::LLT<Eigen::MatrixXd> llt(spec.covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("matching_features: covariance is not positive definite");
  return llt.matrixL().solve(x.transpose()).transpose();
}

std::vector<std::vector<int>> draw_templates(int n_exposed, int m, int n_candidates,
                                             std::uint64_t seed) {
  if (m >= n_exposed)
    throw std::domain_error("draw_templates: template size must be below the exposed count");
  if (m < 1 || n_candidates < 1)
    throw std::invalid_argument("draw_templates: need m >= 1 and at least one candidate");
  std::mt19937_64 rng = make_rng(seed, stream::templates);
  std::vector<int> indices(static_cast<std::size_t>(n_exposed));
  std::iota(indices.begin(), indices.end(), 0);
  std::vector<std::vector<int>> candidates;
  candidates.reserve(static_cast<std::size_t>(n_candidates));
  for (int c = 0; c < n_candidates; ++c) {
    // Partial Fisher-Yates: the first m entries are a uniform subset.
    for (int i = 0; i < m; ++i) {
      std::uniform_int_distribution<int> pick(i, n_exposed - 1);
      std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<int> tmpl(indices.begin(), indices.begin() + m);
    std::sort(tmpl.begin(), tmpl.end());
    candidates.push_back(std::move(tmpl));
  }
  return candidates;
}

int select_template(const std::vector<std::vector<int>>& candidates,
                    const Eigen::MatrixXd& exposed_features) {
  if (candidates.empty()) throw std::invalid_argument("select_template: no candidates");
  const Eigen::Index n = exposed_features.rows();
  // Total distance from a template to the full exposed group decomposes into
  // per-member row sums of the full pairwise distance matrix.
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = (exposed_features.row(i) - exposed_features.row(j)).norm();
      row_sums[i] += d;
      row_sums[j] += d;
    }
  }
  int best = 0;
  double best_total = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    double total = 0.0;
    for (int i : candidates[c]) {
      if (i < 0 || i >= n) throw std::invalid_argument("select_template: index out of range");
      total += row_sums[i];
    }
    if (total < best_total) {
      best_total = total;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<Subject> MatchedPairSet::unexposed_subjects() const {
  std::vector<Subject> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.unexposed);
  return out;
}

std::vector<double> MatchedPairSet::unexposed_propensities() const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.unexposed_propensity);
  return out;
}

MatchedPairSet optimal_match(const std::vector<Subject>& exposed_template,
                             const std::vector<Subject>& unexposed,
                             const Eigen::MatrixXd& template_features,
                             const Eigen::MatrixXd& unexposed_features,
                             const DistanceSpec& spec,
                             const std::vector<double>& template_propensity,
                             const std::vector<double>& unexposed_propensity) {
  const auto m = static_cast<Eigen::Index>(exposed_template.size());
  const auto n0 = static_cast<Eigen::Index>(unexposed.size());
  if (m == 0) throw std::invalid_argument("optimal_match: empty template");
  if (n0 < m)
    throw std::invalid_argument("optimal_match: fewer unexposed subjects than template members");
  if (template_features.rows() != m || unexposed_features.rows() != n0 ||
      template_features.cols() != unexposed_features.cols())
    throw std::invalid_argument("optimal_match: feature dimensions do not line up");

  Eigen::MatrixXd cost(m, n0);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n0; ++j)
      cost(i, j) = (template_features.row(i) - unexposed_features.row(j)).norm();

  AssignmentResult assignment = solve_assignment(cost);

  MatchedPairSet out;
  out.distance = spec;
  out.total_within_pair_distance = assignment.total_cost;
  out.pairs.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    MatchedPair pair;
    pair.exposed = exposed_template[static_cast<std::size_t>(i)];
    pair.unexposed = unexposed[static_cast<std::size_t>(assignment.col_for_row[static_cast<std::size_t>(i)])];
    if (!template_propensity.empty())
      pair.exposed_propensity = template_propensity[static_cast<std::size_t>(i)];
    if (!unexposed_propensity.empty())
      pair.unexposed_propensity =
          unexposed_propensity[static_cast<std::size_t>(assignment.col_for_row[static_cast<std::size_t>(i)])];
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

Eigen::VectorXd pooled_sd(const Eigen::MatrixXd& exposed_covariates,
                          const Eigen::MatrixXd& unexposed_covariates) {
  const Eigen::Index n1 = exposed_covariates.rows();
  const Eigen::Index n0 = unexposed_covariates.rows();
  if (n1 < 2 || n0 < 2)
    throw std::invalid_argument("pooled_sd: need at least two subjects per group");
  Eigen::VectorXd out(exposed_covariates.cols());
  for (Eigen::Index j = 0; j < exposed_covariates.cols(); ++j) {
    double m1 = exposed_covariates.col(j).mean();
    double m0 = unexposed_covariates.col(j).mean();
    double s1 = (exposed_covariates.col(j).array() - m1).square().sum();
    double s0 = (unexposed_covariates.col(j).array() - m0).square().sum();
    out[j] = std::sqrt((s1 + s0) / static_cast<double>(n1 + n0 - 2));
  }
  return out;
}

std::vector<BalanceRow> balance_report(const Eigen::MatrixXd& exposed_covariates,
                                       const Eigen::MatrixXd& unexposed_covariates,
                                       const Eigen::VectorXd& pooled_sd,
                                       const std::vector<std::string>& names,
                                       const std::string& stage) {
  const Eigen::Index p = exposed_covariates.cols();
  if (unexposed_covariates.cols() != p || pooled_sd.size() != p ||
      static_cast<Eigen::Index>(names.size()) != p)
    throw std::invalid_argument("balance_report: dimension mismatch");
  if (exposed_covariates.rows() == 0 || unexposed_covariates.rows() == 0)
    throw std::invalid_argument("balance_report: both exposure groups must be nonempty");

  auto is_binary = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index j) {
    auto col_binary = [j](const Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (m(i, j) != 0.0 && m(i, j) != 1.0) return false;
      return true;
    };
    return col_binary(a) && col_binary(b);
  };

  std::vector<BalanceRow> rows;
  rows.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    BalanceRow row;
    row.covariate = names[static_cast<std::size_t>(j)];
    row.stage = stage;
    double m1 = exposed_covariates.col(j).mean();
    double m0 = unexposed_covariates.col(j).mean();
    if (is_binary(exposed_covariates, unexposed_covariates, j)) {
      row.metric = "prop_diff";
      row.value = m1 - m0;
    } else {
      row.metric = "smd";
      if (pooled_sd[j] == 0.0) {
        if (m1 == m0) {
          row.value = 0.0;
        } else {
          row.value = std::numeric_limits<double>::quiet_NaN();
          row.undefined = true;
        }
      } else {
        row.value = (m1 - m0) / pooled_sd[j];
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ccrmst
