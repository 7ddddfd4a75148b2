#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccrmst/matching.hpp"
#include "ccrmst/propensity.hpp"
#include "ccrmst/step_curve.hpp"
#include "ccrmst/types.hpp"

namespace ccrmst {

enum class AttMethod { ps_plain, ps_template, covar_plain, covar_template };

std::string to_string(AttMethod m);
AttMethod att_method_from_string(const std::string& name);

// Weighted Nelson-Aalen cumulative hazard of the exposed pair members:
// jumps of (events at u) / (rho-weighted at-risk total at u) at each exposed
// event time u <= tau. Reduces to the standard Nelson-Aalen at unit weights.
StepCurve hazard_treated(const MatchedPairSet& pairs, double tau, EventDefinition def);

// Counterfactual control-arm cumulative hazard from the matched unexposed
// members: jump numerators rho_1i / phi_i, risk-set weights
// rho_1i * rho_0i / phi_i, with phi evaluated per pair.
StepCurve hazard_control(const MatchedPairSet& pairs, const PhiModel& phi, double tau,
                         EventDefinition def, bool evaluate_at_exposed = false);

// Point estimate only: integral of exp(-H_treated) - exp(-H_control) on
// [0, tau]. Throws when tau exceeds the largest follow-up time in either
// arm (no extrapolation past the data).
AttEstimate estimate_att_point(const MatchedPairSet& pairs, const PhiModel& phi, double tau,
                               EventDefinition def, bool evaluate_at_exposed = false);

struct BootstrapResult {
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> draws;  // indexed by draw; excluded draws are absent
  int n_missing = 0;
  std::vector<std::string> warnings;
};

// Pair-level bootstrap: m pairs resampled with replacement per draw, the ATT
// recomputed with the original case-cohort weights. phi is refit on each
// resample when refit_phi is set (the default treats phi as part of the
// estimator); otherwise the original fit is reused. Draws whose resample
// has no events in an arm, or violates the truncation-time condition, are
// recorded as missing and excluded.
BootstrapResult bootstrap_variance(const MatchedPairSet& pairs, const PhiConfig& phi_config,
                                   const PhiModel& phi_original, double att_point, double tau,
                                   EventDefinition def, int n_draws, std::uint64_t seed,
                                   bool refit_phi = true, bool evaluate_at_exposed = false,
                                   bool percentile_ci = false);

// Full result for one matched analysis.
struct AttResult {
  AttEstimate estimate;
  StepCurve hazard_treated;
  StepCurve hazard_control;
  std::vector<double> bootstrap_draws;
  int bootstrap_missing = 0;
  AttMethod method = AttMethod::ps_template;
  double phi_min = 0.0;
  double phi_max = 0.0;
  int template_id = -1;
  std::vector<std::string> warnings;
};

// Point estimate plus bootstrap in one call.
AttResult estimate_att(const MatchedPairSet& pairs, const PhiConfig& phi_config, double tau,
                       EventDefinition def, int bootstrap_draws, std::uint64_t seed,
                       AttMethod method, bool refit_phi = true,
                       bool evaluate_at_exposed = false, bool percentile_ci = false);

}  // namespace ccrmst
