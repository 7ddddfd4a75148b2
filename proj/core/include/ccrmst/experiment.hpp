#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ccrmst/case_cohort.hpp"
#include "ccrmst/estimator.hpp"
#include "ccrmst/simgen.hpp"

namespace ccrmst {

// One simulation experiment: R replications of cohort generation,
// case-cohort sampling, matching, and ATT estimation for each method.
struct ExperimentConfig {
  SimScenario scenario;
  std::vector<AttMethod> methods;
  EventDefinition event_definition = EventDefinition::generalized;
  int replications = 400;
  int bootstrap_draws = 500;
  double template_ratio = 5.0;  // template size m = round(n0 / ratio)
  int n_candidates = 50;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  // True ATT used for bias/coverage; NaN falls back to the scenario preset.
  double true_att = std::numeric_limits<double>::quiet_NaN();
  AlphaConvention alpha_convention = AlphaConvention::stratum;
  bool refit_phi = true;
  bool evaluate_phi_at_exposed = false;
  bool percentile_ci = false;
  double max_failure_fraction = 0.02;

  double resolved_true_att() const;
  void validate() const;
};

struct ReplicationMethodResult {
  bool ok = false;
  std::string error;
  double att = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_pairs = 0;
  int bootstrap_missing = 0;
  double phi_min = 0.0;
  double phi_max = 0.0;
};

struct ReplicationResult {
  int replication = 0;
  bool ok = false;        // cohort/sampling-level success
  std::string error;
  double tau = 0.0;
  int n_sample = 0;
  int n_exposed = 0;
  int n_unexposed = 0;
  std::vector<ReplicationMethodResult> methods;  // aligned with config.methods
};

struct MethodMetrics {
  AttMethod method = AttMethod::ps_template;
  EventDefinition event_definition = EventDefinition::generalized;
  double true_att = 0.0;
  int n_used = 0;
  int n_failed = 0;
  double mean_att = 0.0;
  double pct_bias = 0.0;  // 100 * (mean - true) / true
  double sem = 0.0;       // mean bootstrap SE
  double see = 0.0;       // SD of estimates across replications; NaN when R = 1
  double coverage = 0.0;  // fraction of 95% CIs covering the true ATT
};

struct MethodCurves {
  AttMethod method = AttMethod::ps_template;
  StepCurve treated;
  StepCurve control;
};

struct ExperimentResult {
  std::vector<MethodMetrics> metrics;
  std::vector<ReplicationResult> replications;
  // Illustrative outputs from the first replication: hazard curves and
  // covariate balance per method, plus the pre-matching balance.
  std::vector<MethodCurves> example_curves;
  std::vector<BalanceRow> example_balance;
  std::vector<std::string> warnings;
};

// Analysis of one already-sampled case-cohort dataset with every configured
// method; shared by the experiment runner and the dataset workflow.
struct SampleAnalysisOptions {
  std::vector<AttMethod> methods;
  EventDefinition event_definition = EventDefinition::conventional;
  double tau = 0.0;
  double template_ratio = 5.0;
  int n_candidates = 50;
  int bootstrap_draws = 500;
  AlphaConvention alpha_convention = AlphaConvention::stratum;
  double alpha_single = 1.0;
  bool refit_phi = true;
  bool evaluate_phi_at_exposed = false;
  bool percentile_ci = false;
  std::uint64_t seed = 0;
  std::vector<int> matching_covariate_indices;  // empty = all
  // Extra propensity-model columns (stratum dummies), one vector per sample
  // subject; empty = none.
  std::vector<std::vector<double>> extra_propensity_columns;
};

struct SampleAnalysisOutput {
  std::vector<ReplicationMethodResult> methods;  // aligned with options.methods
  std::vector<AttResult> details;                // only for ok methods; same order
  std::vector<int> detail_index;                 // method index of each detail
  LogisticFit propensity_fit;
  bool propensity_ok = false;
  std::string propensity_error;
  std::vector<MatchedPairSet> pair_sets;  // aligned with details
};

SampleAnalysisOutput analyze_sample(const CaseCohortSample& sample,
                                    const SampleAnalysisOptions& options);

ReplicationResult run_replication(const ExperimentConfig& config, int replication);

ExperimentResult run_experiment(const ExperimentConfig& config);

MethodMetrics aggregate_metrics(AttMethod method, EventDefinition def, double true_att,
                                const std::vector<ReplicationResult>& replications,
                                int method_index);

}  // namespace ccrmst
