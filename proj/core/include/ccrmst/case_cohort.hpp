#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccrmst/types.hpp"

namespace ccrmst {

// The analyzed two-phase sample: every case plus the Bernoulli subcohort,
// each subject carrying its inverse sampling probability weight
// rho = delta + (1 - delta) * xi / alpha_b.
struct CaseCohortSample {
  std::vector<Subject> subjects;  // rho > 0 only
  std::vector<double> alpha;      // per-stratum subcohort probabilities
  EventDefinition event_definition = EventDefinition::conventional;
  int n_unexposed = 0;  // n0 among included subjects
  int n_exposed = 0;    // n1
  std::vector<std::string> warnings;
};

struct CaseCohortDraw {
  CaseCohortSample sample;
  // Full-cohort annotations, aligned with the input cohort (rho = 0 for
  // excluded subjects); used only by full-cohort exports.
  std::vector<int> xi;
  std::vector<double> rho;
};

// Stratum-specific subcohort probabilities alpha_b = min(1, cases_b / noncases_b),
// targeting a case-to-control ratio near one per stratum. A stratum with no
// non-cases (or, degenerately, no cases) gets alpha_b = 1.
std::vector<double> default_alphas(const std::vector<Subject>& cohort, int n_strata,
                                   EventDefinition def);

// Bernoulli subcohort draw plus weight assignment. Case status follows
// config.event_definition; config.alpha must hold one probability per stratum.
CaseCohortDraw draw_case_cohort(const std::vector<Subject>& cohort, const StudyConfig& config,
                                std::uint64_t seed);

// Expected subcohort fraction sum_b (N_b/N) alpha_b, the pooled single-alpha
// convention. Estimated from a drawn sample by Horvitz-Thompson stratum
// totals when the full cohort is not available.
double pooled_alpha(const std::vector<Subject>& cohort, const std::vector<double>& alpha,
                    int n_strata);
double pooled_alpha_from_sample(const CaseCohortSample& sample, int n_strata);

}  // namespace ccrmst
