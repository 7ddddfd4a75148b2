#include "ccrmst/case_cohort.hpp"

#include <random>

#include "ccrmst/rng.hpp"

namespace ccrmst {

std::vector<double> default_alphas(const std::vector<Subject>& cohort, int n_strata,
                                   EventDefinition def) {
  if (n_strata < 1) throw std::invalid_argument("default_alphas: need at least one stratum");
  std::vector<std::int64_t> cases(static_cast<std::size_t>(n_strata), 0);
  std::vector<std::int64_t> noncases(static_cast<std::size_t>(n_strata), 0);
  for (const Subject& s : cohort) {
    if (s.stratum < 1 || s.stratum > n_strata)
      throw std::invalid_argument("default_alphas: subject stratum out of range");
    auto b = static_cast<std::size_t>(s.stratum - 1);
    (s.event(def) == 1 ? cases[b] : noncases[b]) += 1;
  }
  std::vector<double> alpha(static_cast<std::size_t>(n_strata), 1.0);
  for (int b = 0; b < n_strata; ++b) {
    auto k = static_cast<std::size_t>(b);
    if (noncases[k] == 0 || cases[k] == 0) continue;  // alpha_b = 1
    alpha[k] = std::min(1.0, static_cast<double>(cases[k]) / static_cast<double>(noncases[k]));
  }
  return alpha;
}

CaseCohortDraw draw_case_cohort(const std::vector<Subject>& cohort, const StudyConfig& config,
                                std::uint64_t seed) {
  if (static_cast<int>(config.alpha.size()) != config.n_strata)
    throw std::invalid_argument("draw_case_cohort: alpha size must equal number of strata");
  for (double a : config.alpha)
    if (!(a > 0.0 && a <= 1.0))
      throw std::domain_error("draw_case_cohort: sampling probabilities must lie in (0,1]");

  CaseCohortDraw draw;
  draw.sample.alpha = config.alpha;
  draw.sample.event_definition = config.event_definition;
  draw.xi.assign(cohort.size(), 0);
  draw.rho.assign(cohort.size(), 0.0);

  std::vector<std::int64_t> stratum_count(static_cast<std::size_t>(config.n_strata), 0);
  std::mt19937_64 rng = make_rng(seed, stream::sampling);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const Subject& s = cohort[i];
    if (s.stratum < 1 || s.stratum > config.n_strata)
      throw std::invalid_argument("draw_case_cohort: subject stratum out of range");
    auto b = static_cast<std::size_t>(s.stratum - 1);
    ++stratum_count[b];
    double alpha_b = config.alpha[b];
    int xi = unif(rng) < alpha_b ? 1 : 0;
    int is_case = s.event(config.event_definition);
    double rho = is_case == 1 ? 1.0 : (xi == 1 ? 1.0 / alpha_b : 0.0);
    draw.xi[i] = xi;
    draw.rho[i] = rho;
    if (rho > 0.0) {
      Subject included = s;
      included.subcohort_flag = xi;
      included.weight = rho;
      (included.exposure == 1 ? draw.sample.n_exposed : draw.sample.n_unexposed) += 1;
      draw.sample.subjects.push_back(std::move(included));
    }
  }
  for (int b = 0; b < config.n_strata; ++b)
    if (stratum_count[static_cast<std::size_t>(b)] == 0)
      draw.sample.warnings.push_back("stratum " + std::to_string(b + 1) + " is empty");
  return draw;
}

double pooled_alpha(const std::vector<Subject>& cohort, const std::vector<double>& alpha,
                    int n_strata) {
  std::vector<std::int64_t> count(static_cast<std::size_t>(n_strata), 0);
  for (const Subject& s : cohort) ++count[static_cast<std::size_t>(s.stratum - 1)];
  double num = 0.0, den = 0.0;
  for (int b = 0; b < n_strata; ++b) {
    num += static_cast<double>(count[static_cast<std::size_t>(b)]) *
           alpha[static_cast<std::size_t>(b)];
    den += static_cast<double>(count[static_cast<std::size_t>(b)]);
  }
  if (den == 0.0) throw std::invalid_argument("pooled_alpha: empty cohort");
  return num / den;
}

double pooled_alpha_from_sample(const CaseCohortSample& sample, int n_strata) {
  // Horvitz-Thompson estimates of the stratum sizes.
  std::vector<double> weight_sum(static_cast<std::size_t>(n_strata), 0.0);
  for (const Subject& s : sample.subjects)
    weight_sum[static_cast<std::size_t>(s.stratum - 1)] += s.weight;
  double num = 0.0, den = 0.0;
  for (int b = 0; b < n_strata; ++b) {
    num += weight_sum[static_cast<std::size_t>(b)] * sample.alpha[static_cast<std::size_t>(b)];
    den += weight_sum[static_cast<std::size_t>(b)];
  }
  if (den == 0.0) throw std::invalid_argument("pooled_alpha_from_sample: empty sample");
  return num / den;
}

}  // namespace ccrmst
