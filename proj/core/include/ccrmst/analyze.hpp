#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ccrmst/case_cohort.hpp"
#include "ccrmst/experiment.hpp"
#include "ccrmst/io.hpp"

namespace ccrmst {

// Column mapping for an ingested case-cohort CSV. Strata may be one column
// of labels or several columns whose value combinations define the strata.
// xi/rho are optional when per-stratum alphas are supplied instead.
struct DatasetColumns {
  std::string id = "id";
  std::vector<std::string> covariates;
  std::string exposure = "exposure";
  std::string time = "time";
  std::string event = "event";
  std::vector<std::string> strata;
  std::string xi = "xi";
  std::string rho = "rho";
};

struct AnalyzeConfig {
  std::string csv_path;
  DatasetColumns columns;
  // NaN -> 80th percentile of the observed times.
  double tau = std::numeric_limits<double>::quiet_NaN();
  // When set, a continuous exposure column is dichotomized at this threshold
  // (exposure = value > threshold).
  double exposure_threshold = std::numeric_limits<double>::quiet_NaN();
  std::vector<AttMethod> methods{AttMethod::ps_plain, AttMethod::ps_template,
                                 AttMethod::covar_plain, AttMethod::covar_template};
  EventDefinition event_definition = EventDefinition::conventional;
  std::vector<double> template_ratios{5.0};
  int n_candidates = 50;
  int bootstrap_draws = 500;
  AlphaConvention alpha_convention = AlphaConvention::stratum;
  bool include_strata_in_propensity = true;
  bool refit_phi = true;
  bool evaluate_phi_at_exposed = false;
  bool percentile_ci = false;
  std::uint64_t seed = 0;
  // Per-stratum alphas keyed by stratum label combination, used when the
  // CSV has no rho column; empty otherwise.
  std::vector<double> alpha_by_stratum;

  void validate() const;
};

struct AnalyzeMethodRow {
  AttMethod method = AttMethod::ps_template;
  double template_ratio = 0.0;  // NaN for no-template methods
  bool ok = false;
  std::string error;
  AttEstimate estimate;
  int template_id = -1;
  double phi_min = 0.0;
  double phi_max = 0.0;
  int bootstrap_missing = 0;
};

struct AnalyzeResult {
  int n_rows = 0;
  int n_exposed = 0;
  int n_unexposed = 0;
  int n_strata = 0;
  double tau = 0.0;
  std::vector<double> alpha;
  double alpha_single = 0.0;
  std::vector<AnalyzeMethodRow> rows;
  std::vector<BalanceRow> balance;
  std::vector<LabeledCurve> curves;
  std::vector<std::string> warnings;
  std::vector<std::string> covariate_names;
};

// Loads and validates a case-cohort CSV. Weights are checked against
// (event, xi, alpha) row by row; times are truncated at tau and the
// generalized event flag marks subjects followed event-free to tau.
struct LoadedDataset {
  CaseCohortSample sample;
  int n_strata = 0;
  double tau = 0.0;
  std::vector<std::string> covariate_names;
  std::vector<std::string> stratum_labels;  // by stratum index - 1
  std::vector<std::vector<double>> stratum_dummies;  // per subject, B-1 columns
};

LoadedDataset load_dataset(const AnalyzeConfig& config);

AnalyzeResult analyze_dataset(const AnalyzeConfig& config);

}  // namespace ccrmst
