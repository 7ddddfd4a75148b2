#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccrmst {

// Which observations count as events. Under the conventional definition an
// event is a failure observed before both censoring and the truncation time
// tau. The generalized definition additionally counts subjects followed
// event-free through tau as complete observations.
enum class EventDefinition { conventional, generalized };

inline std::string to_string(EventDefinition def) {
  return def == EventDefinition::conventional ? "conv" : "gde";
}

// One individual. obs_time is min(T, tau) with T = min(survival, censoring);
// it never exceeds the owning study's tau. event_generalized is 1 whenever
// event_conventional is, since a failure before tau is complete information
// under both definitions. subcohort_flag (xi) and weight (rho) are zero
// until case-cohort sampling assigns them; in a drawn sample cases carry
// rho = 1 and sampled non-cases rho = 1/alpha_b of their stratum.
struct Subject {
  int id = 0;
  std::vector<double> covariates;
  int exposure = 0;
  double obs_time = 0.0;
  int event_conventional = 0;
  int event_generalized = 0;
  int stratum = 1;  // 1..B
  int subcohort_flag = 0;
  double weight = 0.0;

  int event(EventDefinition def) const {
    return def == EventDefinition::conventional ? event_conventional
                                                : event_generalized;
  }
};

// Study-level constants shared by sampling and estimation.
struct StudyConfig {
  double tau = 0.0;
  int n_covariates = 0;             // p
  int n_continuous = 0;             // k, first k covariate columns
  int n_strata = 1;                 // B
  std::vector<double> alpha;        // per-stratum subcohort sampling probability
  EventDefinition event_definition = EventDefinition::conventional;

  void validate() const {
    if (tau <= 0.0) throw std::invalid_argument("StudyConfig: tau must be positive");
    if (n_continuous > n_covariates)
      throw std::invalid_argument("StudyConfig: more continuous covariates than covariates");
    if (static_cast<int>(alpha.size()) != n_strata)
      throw std::invalid_argument("StudyConfig: alpha size must equal number of strata");
    for (double a : alpha)
      if (!(a > 0.0 && a <= 1.0))
        throw std::invalid_argument("StudyConfig: sampling probabilities must lie in (0,1]");
  }
};

// Point estimate of the RMST difference in the treated plus its bootstrap
// uncertainty. att == rmst_treated - rmst_control by construction.
struct AttEstimate {
  double att = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double rmst_treated = 0.0;
  double rmst_control = 0.0;
  int n_pairs = 0;
};

// N(t) = I(T <= t): raw counting-process indicator, event or not.
inline int counting_process(const Subject& s, double t) {
  if (t < 0.0) throw std::domain_error("counting_process: negative time");
  return s.obs_time <= t ? 1 : 0;
}

// Event-counting indicator I(T <= t, event). Its jumps are the dN
// contributions; a censored subject never jumps.
inline int counting_process(const Subject& s, double t, EventDefinition def) {
  if (t < 0.0) throw std::domain_error("counting_process: negative time");
  return (s.obs_time <= t && s.event(def) == 1) ? 1 : 0;
}

// Y(t) = I(T >= t), boundary inclusive.
inline int at_risk(const Subject& s, double t) {
  if (t < 0.0) throw std::domain_error("at_risk: negative time");
  return s.obs_time >= t ? 1 : 0;
}

}  // namespace ccrmst
