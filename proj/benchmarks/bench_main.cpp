#include <benchmark/benchmark.h>

#include <random>

#include "ccrmst/assignment.hpp"
#include "ccrmst/case_cohort.hpp"
#include "ccrmst/estimator.hpp"
#include "ccrmst/rng.hpp"
#include "ccrmst/simgen.hpp"

namespace {

using namespace ccrmst;

Eigen::MatrixXd random_cost(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd cost(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) cost(i, j) = unif(rng);
  return cost;
}

void bm_assignment(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Eigen::MatrixXd cost = random_cost(m, 5 * m, 42);
  for (auto _ : state) {
    auto r = solve_assignment(cost);
    benchmark::DoNotOptimize(r.total_cost);
  }
  state.SetComplexityN(m);
}
BENCHMARK(bm_assignment)->Arg(50)->Arg(150)->Arg(300)->Complexity();

void bm_generate_cohort(benchmark::State& state) {
  SimScenario sc = preset_scenario("ratio_1_2", static_cast<int>(state.range(0)));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    Cohort c = generate_cohort(sc, seed++);
    benchmark::DoNotOptimize(c.tau);
  }
}
BENCHMARK(bm_generate_cohort)->Arg(5000)->Arg(10000);

void bm_case_cohort_draw(benchmark::State& state) {
  SimScenario sc = preset_scenario("ratio_1_2", 5000);
  Cohort c = generate_cohort(sc, 7);
  auto alphas = default_alphas(c.subjects, 4, EventDefinition::generalized);
  StudyConfig study;
  study.tau = c.tau;
  study.n_covariates = 6;
  study.n_continuous = 3;
  study.n_strata = 4;
  study.alpha = alphas;
  study.event_definition = EventDefinition::generalized;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto draw = draw_case_cohort(c.subjects, study, seed++);
    benchmark::DoNotOptimize(draw.sample.n_exposed);
  }
}
BENCHMARK(bm_case_cohort_draw);

void bm_weighted_hazards(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> exp1(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MatchedPairSet pairs;
  for (int i = 0; i < m; ++i) {
    MatchedPair p;
    auto mk = [&] {
      Subject s;
      s.obs_time = exp1(rng);
      s.event_conventional = s.event_generalized = unif(rng) < 0.5 ? 1 : 0;
      s.weight = unif(rng) < 0.5 ? 1.0 : 3.0;
      s.stratum = 1;
      return s;
    };
    p.exposed = mk();
    p.unexposed = mk();
    pairs.pairs.push_back(p);
  }
  PhiModel phi;
  phi.config.alpha_convention = AlphaConvention::single;
  phi.config.alpha_single = 0.5;
  phi.config.event_definition = EventDefinition::conventional;
  phi.degenerate = true;
  phi.constant_event_prob = 0.3;
  for (auto _ : state) {
    StepCurve h1 = hazard_treated(pairs, 10.0, EventDefinition::conventional);
    StepCurve h0 = hazard_control(pairs, phi, 10.0, EventDefinition::conventional);
    benchmark::DoNotOptimize(h1.values.size() + h0.values.size());
  }
}
BENCHMARK(bm_weighted_hazards)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
