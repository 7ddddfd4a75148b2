#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "ccrmst/case_cohort.hpp"
#include "ccrmst/rng.hpp"
#include "ccrmst/simgen.hpp"

using namespace ccrmst;

namespace {
std::vector<Subject> toy_cohort(int n, double event_rate, int n_strata, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Subject> cohort(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Subject& s = cohort[static_cast<std::size_t>(i)];
    s.id = i;
    s.obs_time = unif(rng);
    s.event_conventional = unif(rng) < event_rate ? 1 : 0;
    s.event_generalized = s.event_conventional;
    s.stratum = 1 + static_cast<int>(unif(rng) * n_strata);
    s.exposure = unif(rng) < 0.4 ? 1 : 0;
    s.covariates = {unif(rng), unif(rng)};
  }
  return cohort;
}
}  // namespace

TEST_CASE("weight formula: cases 1, sampled non-cases 1/alpha, others excluded") {
  std::vector<Subject> cohort = toy_cohort(4000, 0.15, 2, 3);
  StudyConfig cfg;
  cfg.tau = 1.0;
  cfg.n_covariates = 2;
  cfg.n_strata = 2;
  cfg.alpha = {0.2, 0.6};
  cfg.event_definition = EventDefinition::conventional;
  CaseCohortDraw draw = draw_case_cohort(cohort, cfg, 12);

  for (const Subject& s : draw.sample.subjects) {
    if (s.event_conventional == 1) {
      CHECK(s.weight == 1.0);
    } else {
      CHECK(s.subcohort_flag == 1);
      CHECK(s.weight ==
            doctest::Approx(1.0 / cfg.alpha[static_cast<std::size_t>(s.stratum - 1)]));
    }
  }
  // excluded subjects are exactly those with rho == 0 in the annotations
  std::size_t included = 0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (draw.rho[i] > 0.0) ++included;
    if (cohort[i].event_conventional == 1) CHECK(draw.rho[i] == 1.0);
  }
  CHECK(included == draw.sample.subjects.size());
  CHECK(draw.sample.n_exposed + draw.sample.n_unexposed ==
        static_cast<int>(draw.sample.subjects.size()));
}

TEST_CASE("alpha of zero is rejected; empty stratum warns") {
  std::vector<Subject> cohort = toy_cohort(100, 0.1, 2, 4);
  StudyConfig cfg;
  cfg.tau = 1.0;
  cfg.n_covariates = 2;
  cfg.n_strata = 2;
  cfg.alpha = {0.0, 0.5};
  cfg.event_definition = EventDefinition::conventional;
  CHECK_THROWS_AS(draw_case_cohort(cohort, cfg, 1), std::domain_error);

  // move everyone to stratum 1; stratum 2 is empty -> warning, not error
  for (auto& s : cohort) s.stratum = 1;
  cfg.alpha = {0.5, 0.5};
  CaseCohortDraw draw = draw_case_cohort(cohort, cfg, 1);
  REQUIRE(!draw.sample.warnings.empty());
  CHECK(draw.sample.warnings[0].find("stratum 2") != std::string::npos);
}

TEST_CASE("default alphas hit the case:non-case ratio with a cap at one") {
  std::vector<Subject> cohort;
  // stratum 1: 50 cases, 450 non-cases -> alpha = 1/9
  for (int i = 0; i < 500; ++i) {
    Subject s;
    s.stratum = 1;
    s.event_conventional = i < 50 ? 1 : 0;
    cohort.push_back(s);
  }
  // stratum 2: cases >= non-cases -> alpha = 1
  for (int i = 0; i < 30; ++i) {
    Subject s;
    s.stratum = 2;
    s.event_conventional = i < 20 ? 1 : 0;
    cohort.push_back(s);
  }
  auto alpha = default_alphas(cohort, 2, EventDefinition::conventional);
  CHECK(alpha[0] == doctest::Approx(50.0 / 450.0));
  CHECK(alpha[1] == 1.0);
}

TEST_CASE("four strata arise from the X5/X6 combinations in generated cohorts") {
  SimScenario sc = preset_scenario("ratio_1_2", 2000);
  Cohort cohort = generate_cohort(sc, 5);
  std::set<int> strata;
  for (const auto& s : cohort.subjects) {
    CHECK(s.stratum >= 1);
    CHECK(s.stratum <= 4);
    CHECK(s.stratum == 1 + static_cast<int>(s.covariates[4]) + 2 * static_cast<int>(s.covariates[5]));
    strata.insert(s.stratum);
  }
  CHECK(strata.size() == 4);
}

TEST_CASE("expected weight is one for every subject by construction") {
  // E[rho | subject] = delta + (1-delta) alpha * (1/alpha) = 1; verify by
  // averaging the drawn rho over repeated sampling
  std::vector<Subject> cohort = toy_cohort(300, 0.2, 2, 9);
  StudyConfig cfg;
  cfg.tau = 1.0;
  cfg.n_covariates = 2;
  cfg.n_strata = 2;
  cfg.alpha = {0.25, 0.75};
  cfg.event_definition = EventDefinition::conventional;
  const int redraws = 4000;
  std::vector<double> mean_rho(cohort.size(), 0.0);
  for (int r = 0; r < redraws; ++r) {
    CaseCohortDraw draw = draw_case_cohort(cohort, cfg, derive_seed(1000, r));
    for (std::size_t i = 0; i < cohort.size(); ++i) mean_rho[i] += draw.rho[i];
  }
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    mean_rho[i] /= redraws;
    // binomial MC error at alpha=0.25: sd ~= sqrt(3)/sqrt(redraws) ~= 0.027
    CHECK(std::fabs(mean_rho[i] - 1.0) < 0.15);
  }
}

TEST_CASE("Horvitz-Thompson recovery of full-cohort means over redraws") {
  std::vector<Subject> cohort = toy_cohort(2000, 0.12, 3, 21);
  StudyConfig cfg;
  cfg.tau = 1.0;
  cfg.n_covariates = 2;
  cfg.n_strata = 3;
  cfg.alpha = default_alphas(cohort, 3, EventDefinition::conventional);
  cfg.event_definition = EventDefinition::conventional;

  auto g = [](const Subject& s) { return std::sin(3.0 * s.obs_time) + s.covariates[0]; };
  double full = 0.0;
  for (const auto& s : cohort) full += g(s);
  full /= static_cast<double>(cohort.size());

  const int redraws = 200;
  double acc = 0.0;
  for (int r = 0; r < redraws; ++r) {
    CaseCohortDraw draw = draw_case_cohort(cohort, cfg, derive_seed(5000, r));
    double ht = 0.0;
    for (const auto& s : draw.sample.subjects) ht += s.weight * g(s);
    acc += ht / static_cast<double>(cohort.size());
  }
  acc /= redraws;
  CHECK(acc == doctest::Approx(full).epsilon(0.02));
}

TEST_CASE("pooled alpha agrees between cohort and Horvitz-Thompson sample versions") {
  std::vector<Subject> cohort = toy_cohort(5000, 0.15, 3, 33);
  std::vector<double> alpha = default_alphas(cohort, 3, EventDefinition::conventional);
  StudyConfig cfg;
  cfg.tau = 1.0;
  cfg.n_covariates = 2;
  cfg.n_strata = 3;
  cfg.alpha = alpha;
  cfg.event_definition = EventDefinition::conventional;
  double truth = pooled_alpha(cohort, alpha, 3);
  CaseCohortDraw draw = draw_case_cohort(cohort, cfg, 8);
  double est = pooled_alpha_from_sample(draw.sample, 3);
  CHECK(est == doctest::Approx(truth).epsilon(0.05));
}
