#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccrmst/types.hpp"

namespace ccrmst {

// Synthetic-cohort recipe. Covariates are six copula-correlated uniforms on
// [-3,3], the last three dichotomized at zero; exposure follows a logistic
// model in all six; survival is exponential with a log-linear hazard in the
// covariates, exposure, and an exposure-by-X2 interaction. gamma0,
// baseline_hazard and censor_hazard are calibration constants chosen so the
// marginal exposure fraction and the two event rates land on their targets.
struct SimScenario {
  std::string name;
  int n_full = 5000;
  int controls_per_exposed = 2;  // marginal exposed:unexposed ratio 1:this
  double gamma0 = 0.0;
  double baseline_hazard = 1.0;
  double censor_hazard = 1.0;
  double copula_corr = 0.2;
  double event_rate_target_conventional = 0.10;
  double event_rate_target_generalized = 0.30;
  double true_att = 0.0;  // RMST difference in the treated, frozen at calibration
  std::uint64_t seed = 0;

  double target_exposure_fraction() const {
    return 1.0 / (1.0 + controls_per_exposed);
  }
  void validate() const {
    if (n_full <= 0) throw std::invalid_argument("SimScenario: n_full must be positive");
    if (!(copula_corr >= 0.0 && copula_corr < 1.0))
      throw std::invalid_argument("SimScenario: copula_corr must lie in [0,1)");
    if (baseline_hazard <= 0.0 || censor_hazard <= 0.0)
      throw std::invalid_argument("SimScenario: hazards must be positive");
  }
};

// Model coefficients of the generator.
namespace simgen_model {
inline constexpr int n_covariates = 6;
inline constexpr int n_continuous = 3;
// logit P(A=1|X) = gamma0 + <slopes, X>
inline constexpr double exposure_slopes[n_covariates] = {-0.5, 0.5, -0.5, 0.5, -0.5, 0.5};
// log h(X,A) = log h0 + <slopes, X> + log_hr_exposure * A + x2_interaction * X2 * A
inline constexpr double hazard_slopes[n_covariates] = {1.2, -1.2, 1.2, -1.2, 1.2, -1.2};
inline constexpr double log_hr_exposure = 3.0;
inline constexpr double x2_interaction = 1.2;
}  // namespace simgen_model

// n x 6 covariate draw. corr is the target pairwise Pearson correlation of
// the underlying uniforms; the Gaussian-copula latent correlation solves
// corr = (6/pi) asin(r/2). Columns 0..2 are uniform on [-3,3], columns 3..5
// are the indicators of the underlying uniform exceeding zero.
Eigen::MatrixXd generate_covariates(int n, double corr, std::mt19937_64& rng);

// Bernoulli exposure from the logistic model above.
std::vector<int> generate_exposure(const Eigen::MatrixXd& covariates, double gamma0,
                                   std::mt19937_64& rng);

// Log hazard of the outcome model, excluding the baseline term.
double hazard_log_relative(const Eigen::MatrixXd& covariates, int row, int exposure);

struct Cohort {
  std::vector<Subject> subjects;
  double tau = 0.0;
};

// Full synthetic cohort: covariates, exposure, exponential survival and
// censoring, truncation at the cohort's own 80th percentile of observed
// time, both event definitions, and strata 1..4 from (X5, X6).
Cohort generate_cohort(const SimScenario& scenario, std::uint64_t seed);

struct OracleResult {
  double att = 0.0;
  double mc_se = 0.0;
  double tau = 0.0;
  std::int64_t n_exposed = 0;
  std::int64_t n_total = 0;
  double event_rate_conventional = 0.0;
  double event_rate_generalized = 0.0;
  double exposure_fraction = 0.0;
};

// Brute-force Monte Carlo value of the RMST difference in the treated:
// both potential restricted survival times are generated per subject
// (no censoring applied to them) and averaged over the exposed. tau is the
// 80th percentile of the observed times of the same draw.
OracleResult true_att_oracle(const SimScenario& scenario, std::int64_t n_mc,
                             std::uint64_t seed, int threads = 1);

struct CalibrationResult {
  SimScenario scenario;  // with calibrated constants filled in
  double achieved_exposure_fraction = 0.0;
  double achieved_event_rate_conventional = 0.0;
  double achieved_event_rate_generalized = 0.0;
  double achieved_true_att = 0.0;
  double true_att_mc_se = 0.0;
  double tau_population = 0.0;
};

// Recomputes (gamma0, h0, censor hazard) for a ratio preset from scratch:
// bisection on gamma0 for the marginal exposure fraction, bisection on the
// hazard-to-censoring ratio for the conventional event rate, then a global
// time rescale so the true ATT matches att_target (every time quantity is
// linear in the scale, so the rescale is exact). Pass att_target = 0 to
// keep the scale of censor_hazard = 1.
CalibrationResult calibrate_scenario(int controls_per_exposed, double att_target,
                                     std::uint64_t seed, std::int64_t n_pilot = 4000000,
                                     std::int64_t n_oracle = 10000000, int threads = 1);

// Frozen presets for the three exposure ratios ("ratio_1_2", "ratio_1_3",
// "ratio_1_4"). Constants come from calibrate_scenario; rerun the calibrate
// command to reproduce them.
SimScenario preset_scenario(const std::string& name, int n_full = 5000);
std::vector<std::string> preset_scenario_names();

StudyConfig study_config_for(const Cohort& cohort, EventDefinition def);

}  // namespace ccrmst
