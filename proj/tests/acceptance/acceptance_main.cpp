// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Scales and tolerances are pinned here, not configurable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccrmst/analyze.hpp"
#include "ccrmst/assignment.hpp"
#include "ccrmst/experiment.hpp"
#include "ccrmst/io.hpp"
#include "ccrmst/rng.hpp"
#include "newton_logistic_oracle.hpp"
#include "reference_nelson_aalen.hpp"

using namespace ccrmst;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

constexpr std::uint64_t kSeed = 5;  // master seed of the acceptance runs

// Anderson-Darling statistic for normality with estimated mean and variance;
// the 1% critical value for the adjusted statistic is 1.035 (both parameters
// estimated).
double anderson_darling_adjusted(std::vector<double> x) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  std::sort(x.begin(), x.end());
  double a2 = -n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = (x[i] - mean) / sd;
    double phi = std::min(std::max(0.5 * std::erfc(-z / std::sqrt(2.0)), 1e-300), 1.0 - 1e-16);
    double zr = (x[x.size() - 1 - i] - mean) / sd;
    double phir =
        std::min(std::max(0.5 * std::erfc(-zr / std::sqrt(2.0)), 1e-300), 1.0 - 1e-16);
    a2 -= (2.0 * static_cast<double>(i + 1) - 1.0) / n * (std::log(phi) + std::log1p(-phir));
  }
  return a2 * (1.0 + 0.75 / n + 2.25 / (n * n));
}

void criterion_1_oracle() {
  bool ok = true;
  std::ostringstream detail;
  for (const auto& name : preset_scenario_names()) {
    SimScenario sc = preset_scenario(name);
    OracleResult r = true_att_oracle(sc, 10000000, derive_seed(kSeed, 77), 2);
    double err = std::fabs(r.att - sc.true_att);
    bool this_ok = err <= 3.0 * r.mc_se;
    ok = ok && this_ok;
    detail << name << " att=" << fmt("%.5f", r.att) << " target=" << fmt("%.4f", sc.true_att)
           << " |err|=" << fmt("%.2g", err) << " 3se=" << fmt("%.2g", 3.0 * r.mc_se) << "; ";
  }
  report("criterion 1 (true-effect oracle, n_mc=1e7)", ok, detail.str());
}

ExperimentResult run_table_block(EventDefinition def, std::vector<AttMethod> methods,
                                 std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.scenario = preset_scenario("ratio_1_2", 5000);
  cfg.methods = std::move(methods);
  cfg.event_definition = def;
  cfg.replications = 100;
  cfg.bootstrap_draws = 200;
  cfg.seed = seed;
  cfg.threads = 2;
  return run_experiment(cfg);
}

void criteria_2_4_10(const ExperimentResult& r) {
  const MethodMetrics& covar = r.metrics[0];
  const MethodMetrics& ps = r.metrics[1];
  bool c2 = covar.pct_bias >= -5.0 && covar.pct_bias <= 8.0 && 100.0 * covar.coverage >= 90.0 &&
            100.0 * covar.coverage <= 99.0 && ps.pct_bias >= -6.0 && ps.pct_bias <= 8.0 &&
            100.0 * ps.coverage >= 90.0 && 100.0 * ps.coverage <= 99.0;
  report("criterion 2 (table block, N=5000 1:2 gde, R=100, B=200)", c2,
         fmt("covar_template bias=%.2f%% (band [-5,8]) cp=%.1f (band [90,99]); "
             "ps_template bias=%.2f%% (band [-6,8]) cp=%.1f",
             covar.pct_bias, 100.0 * covar.coverage, ps.pct_bias, 100.0 * ps.coverage));

  double ratio_covar = covar.sem / covar.see;
  double ratio_ps = ps.sem / ps.see;
  bool c4 = ratio_covar >= 0.8 && ratio_covar <= 1.2 && ratio_ps >= 0.8 && ratio_ps <= 1.2;
  report("criterion 4 (SEM/SEE in [0.8, 1.2])", c4,
         fmt("covar_template %.3f, ps_template %.3f", ratio_covar, ratio_ps));

  bool c10 = true;
  std::ostringstream detail;
  for (std::size_t mi = 0; mi < r.metrics.size(); ++mi) {
    std::vector<double> deviates;
    for (const auto& rep : r.replications)
      if (rep.ok && rep.methods[mi].ok)
        deviates.push_back((rep.methods[mi].att - r.metrics[mi].true_att) / r.metrics[mi].see);
    double a2 = anderson_darling_adjusted(deviates);
    bool this_ok = a2 <= 1.035;
    c10 = c10 && this_ok;
    detail << to_string(r.metrics[mi].method) << " A2*=" << fmt("%.3f", a2)
           << " (crit 1.035); ";
  }
  report("criterion 10 (normality smoke test, 1% level)", c10, detail.str());
}

void criterion_3_no_template() {
  ExperimentResult r =
      run_table_block(EventDefinition::conventional,
                      {AttMethod::covar_plain, AttMethod::ps_plain}, derive_seed(kSeed, 3));
  const MethodMetrics& covar = r.metrics[0];
  const MethodMetrics& ps = r.metrics[1];
  bool covar_ok = covar.pct_bias < -10.0 && 100.0 * covar.coverage < 90.0;
  bool ps_ok = ps.pct_bias < -10.0 && 100.0 * ps.coverage < 90.0;
  // The propensity-score half of this criterion is expected to fail: with
  // the weight-adjusted propensity fit this implementation mandates, the
  // fitted score is a monotone index of the baseline hazard under this
  // generator, and the optimal matcher has a ~2:1 control pool to select
  // from, so matching without a template stays nearly unbiased on the score.
  // The strong-bias expectation is reproducible only with an unweighted fit
  // on the case-enriched sample. Reported honestly rather than loosened.
  report("criterion 3 (no-template bias, conventional definition)", covar_ok && ps_ok,
         fmt("covar_plain bias=%.2f%% cp=%.1f (need bias<-10, cp<90)%s; "
             "ps_plain bias=%.2f%% cp=%.1f (need bias<-10, cp<90)%s",
             covar.pct_bias, 100.0 * covar.coverage, covar_ok ? "" : " [unmet]", ps.pct_bias,
             100.0 * ps.coverage, ps_ok ? "" : " [unmet]"));
}

void criterion_5_assignment_oracle() {
  std::mt19937_64 rng(derive_seed(kSeed, 5));
  std::uniform_real_distribution<double> unif(0.0, 100.0);
  std::uniform_int_distribution<int> rows(1, 5), extra(0, 3);
  int bad = 0;
  const int trials = 150;
  for (int t = 0; t < trials; ++t) {
    int nr = rows(rng);
    int nc = std::min(8, nr + extra(rng));
    Eigen::MatrixXd cost(nr, nc);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) cost(i, j) = unif(rng);
    AssignmentResult solved = solve_assignment(cost);

    double best = std::numeric_limits<double>::infinity();
    std::vector<char> used(static_cast<std::size_t>(nc), 0);
    std::function<void(int, double)> rec = [&](int row, double acc) {
      if (row == nr) {
        best = std::min(best, acc);
        return;
      }
      for (int j = 0; j < nc; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        used[static_cast<std::size_t>(j)] = 1;
        rec(row + 1, acc + cost(row, j));
        used[static_cast<std::size_t>(j)] = 0;
      }
    };
    rec(0, 0.0);
    if (solved.total_cost != best) ++bad;
  }
  report("criterion 5 (assignment solver vs exhaustive enumeration)", bad == 0,
         fmt("%d random instances up to 5x8, %d total mismatches (exact comparison)", trials,
             bad));
}

void criterion_6_logistic_oracle() {
  std::mt19937_64 rng(derive_seed(kSeed, 6));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> npick(40, 200), ppick(1, 5);
  int done = 0;
  double worst = 0.0;
  while (done < 60) {
    int n = npick(rng), p = ppick(rng);
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n), w(n);
    for (int i = 0; i < n; ++i) {
      double eta = -0.2;
      for (int j = 0; j < p; ++j) {
        x(i, j) = normal(rng);
        eta += (j % 2 == 0 ? 0.7 : -0.5) * x(i, j);
      }
      y[i] = unif(rng) < expit_stable(eta) ? 1.0 : 0.0;
      w[i] = unif(rng) < 0.4 ? 1.0 : 1.0 / (0.1 + 0.8 * unif(rng));
    }
    LogisticFit fit;
    try {
      fit = fit_weighted_logistic(y, x, w);
    } catch (const std::exception&) {
      continue;
    }
    if (!fit.converged) continue;
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
    std::vector<double> yv(static_cast<std::size_t>(n)), wv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) rows[static_cast<std::size_t>(i)].push_back(x(i, j));
      yv[static_cast<std::size_t>(i)] = y[i];
      wv[static_cast<std::size_t>(i)] = w[i];
    }
    auto oracle = ccrmst_test::newton_logistic(rows, yv, wv);
    for (int j = 0; j <= p; ++j)
      worst =
          std::max(worst, std::fabs(fit.coefficients[j] - oracle[static_cast<std::size_t>(j)]));
    ++done;
  }
  report("criterion 6 (weighted logistic vs Newton oracle)", worst <= 1e-6,
         fmt("%d datasets, worst max-norm difference %.2e (tol 1e-6)", done, worst));
}

void criterion_7_unit_weight_reduction() {
  std::mt19937_64 rng(derive_seed(kSeed, 7));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> exp1(1.0);
  int bad = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    int m = 5 + static_cast<int>(unif(rng) * 60);
    MatchedPairSet pairs;
    std::vector<double> t1, t0;
    std::vector<int> e1, e0;
    for (int i = 0; i < m; ++i) {
      MatchedPair p;
      auto mk = [&](std::vector<double>& tv, std::vector<int>& ev) {
        Subject s;
        s.obs_time = std::round(exp1(rng) * 6.0) / 6.0 + 1.0 / 6.0;  // force ties
        s.event_conventional = s.event_generalized = unif(rng) < 0.65 ? 1 : 0;
        s.weight = 1.0;
        s.stratum = 1;
        tv.push_back(s.obs_time);
        ev.push_back(s.event_conventional);
        return s;
      };
      p.exposed = mk(t1, e1);
      p.unexposed = mk(t0, e0);
      pairs.pairs.push_back(p);
    }
    PhiModel phi;
    phi.config.alpha_convention = AlphaConvention::single;
    phi.config.alpha_single = 1.0;
    phi.config.event_definition = EventDefinition::conventional;
    phi.degenerate = true;
    phi.constant_event_prob = 1.0;  // phi == 1
    double tau = 50.0;
    StepCurve h1 = hazard_treated(pairs, tau, EventDefinition::conventional);
    StepCurve h0 = hazard_control(pairs, phi, tau, EventDefinition::conventional);
    StepCurve r1 = ccrmst_test::reference_nelson_aalen(t1, e1, tau);
    StepCurve r0 = ccrmst_test::reference_nelson_aalen(t0, e0, tau);
    if (h1.times != r1.times || h1.values != r1.values || h0.times != r0.times ||
        h0.values != r0.values)
      ++bad;
  }
  report("criterion 7 (unit-weight reduction equals Nelson-Aalen exactly)", bad == 0,
         fmt("%d random samples, %d mismatches (exact equality required)", trials, bad));
}

void criterion_8_horvitz_thompson() {
  SimScenario sc = preset_scenario("ratio_1_2", 20000);
  Cohort cohort = generate_cohort(sc, derive_seed(kSeed, 8));
  auto alphas = default_alphas(cohort.subjects, 4, EventDefinition::conventional);
  StudyConfig study;
  study.tau = cohort.tau;
  study.n_covariates = 6;
  study.n_continuous = 3;
  study.n_strata = 4;
  study.alpha = alphas;
  study.event_definition = EventDefinition::conventional;

  std::mt19937_64 rng(derive_seed(kSeed, 88));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::array<double, 8>> coef(10);
  for (auto& c : coef)
    for (auto& v : c) v = normal(rng);
  auto functional = [&](int k, const Subject& s) {
    const auto& c = coef[static_cast<std::size_t>(k)];
    double lin = c[0] * s.obs_time + c[1] * s.exposure + c[7] * s.event_conventional;
    for (int j = 0; j < 5; ++j)
      lin += c[static_cast<std::size_t>(j + 2)] * s.covariates[static_cast<std::size_t>(j)];
    return std::sin(lin);  // bounded
  };

  std::array<double, 10> full{};
  for (const Subject& s : cohort.subjects)
    for (int k = 0; k < 10; ++k) full[static_cast<std::size_t>(k)] += functional(k, s);
  for (auto& v : full) v /= static_cast<double>(cohort.subjects.size());

  const int redraws = 200;
  std::array<std::vector<double>, 10> estimates;
  for (auto& e : estimates) e.reserve(redraws);
  for (int r = 0; r < redraws; ++r) {
    CaseCohortDraw draw = draw_case_cohort(cohort.subjects, study, derive_seed(kSeed, 800 + r));
    std::array<double, 10> ht{};
    for (const Subject& s : draw.sample.subjects)
      for (int k = 0; k < 10; ++k) ht[static_cast<std::size_t>(k)] += s.weight * functional(k, s);
    for (int k = 0; k < 10; ++k)
      estimates[static_cast<std::size_t>(k)].push_back(
          ht[static_cast<std::size_t>(k)] / static_cast<double>(cohort.subjects.size()));
  }
  bool ok = true;
  double worst_z = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto& e = estimates[static_cast<std::size_t>(k)];
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= redraws;
    double ss = 0.0;
    for (double v : e) ss += (v - mean) * (v - mean);
    double se = std::sqrt(ss / (redraws - 1.0) / redraws);
    double z = std::fabs(mean - full[static_cast<std::size_t>(k)]) / se;
    worst_z = std::max(worst_z, z);
    ok = ok && z <= 3.0;
  }
  report("criterion 8 (Horvitz-Thompson recovery over 200 redraws)", ok,
         fmt("10 bounded functionals, worst |z| = %.2f (limit 3)", worst_z));
}

void criterion_9_property_suite(const ExperimentResult& table_block) {
  bool ok = true;
  std::ostringstream detail;
  auto sub = [&](const char* name, bool pass, const std::string& info = "") {
    ok = ok && pass;
    if (!pass) detail << name << " FAILED " << info << "; ";
  };

  {  // monotone hazard -> valid survival; rmst within (0, tau]
    std::mt19937_64 rng(derive_seed(kSeed, 9));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    bool pass = true;
    for (int t = 0; t < 200 && pass; ++t) {
      StepCurve h;
      double x = 0.0, v = 0.0;
      int jumps = 1 + static_cast<int>(unif(rng) * 15);
      for (int j = 0; j < jumps; ++j) {
        x += 0.05 + unif(rng);
        v += unif(rng);
        h.times.push_back(x);
        h.values.push_back(v);
      }
      StepCurve s = survival_from_hazard(h);
      double tau = x + 1.0;
      double r = rmst_from_survival(s, tau);
      pass = s.is_valid_survival() && r > 0.0 && r <= tau;
    }
    sub("monotone-step-curves/rmst-bounds", pass);
  }

  {  // delta <= delta* and truncation on generated cohorts
    Cohort c = generate_cohort(preset_scenario("ratio_1_4", 20000), derive_seed(kSeed, 91));
    bool pass = true;
    for (const auto& s : c.subjects)
      pass = pass && s.event_conventional <= s.event_generalized && s.obs_time <= c.tau;
    sub("delta<=delta*/truncation", pass);
  }

  {  // phi bounds [1, 1/alpha] on fitted models from real replications
    bool pass = true;
    for (int r = 0; r < 5 && pass; ++r) {
      ExperimentConfig cfg;
      cfg.scenario = preset_scenario("ratio_1_2", 5000);
      cfg.methods = {AttMethod::covar_template, AttMethod::ps_template};
      cfg.event_definition = EventDefinition::generalized;
      cfg.replications = 1;
      cfg.bootstrap_draws = 2;
      cfg.seed = derive_seed(kSeed, 92 + static_cast<std::uint64_t>(r));
      ReplicationResult rep = run_replication(cfg, 0);
      if (!rep.ok) continue;
      Cohort cohort = generate_cohort(cfg.scenario, derive_seed(cfg.seed, 0));
      auto alphas = default_alphas(cohort.subjects, 4, cfg.event_definition);
      double inv = 0.0;
      for (double a : alphas) inv = std::max(inv, 1.0 / a);
      for (const auto& m : rep.methods)
        if (m.ok) pass = pass && m.phi_min >= 1.0 - 1e-9 && m.phi_max <= inv + 1e-9;
    }
    sub("phi-bounds", pass);
  }

  {  // scaling invariance of the assignment solver
    std::mt19937_64 rng(derive_seed(kSeed, 93));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    bool pass = true;
    for (int t = 0; t < 30 && pass; ++t) {
      Eigen::MatrixXd cost(6, 9);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 9; ++j) cost(i, j) = unif(rng);
      AssignmentResult a = solve_assignment(cost);
      AssignmentResult b = solve_assignment(13.25 * cost);
      pass = a.col_for_row == b.col_for_row &&
             std::fabs(b.total_cost - 13.25 * a.total_cost) < 1e-10;
    }
    sub("assignment-scaling-invariance", pass);
  }

  {  // determinism under fixed seeds, independent of thread count
    ExperimentConfig cfg;
    cfg.scenario = preset_scenario("ratio_1_3", 2000);
    cfg.methods = {AttMethod::covar_template};
    cfg.event_definition = EventDefinition::generalized;
    cfg.replications = 6;
    cfg.bootstrap_draws = 40;
    cfg.seed = derive_seed(kSeed, 94);
    cfg.threads = 1;
    ExperimentResult r1 = run_experiment(cfg);
    cfg.threads = 2;
    ExperimentResult r2 = run_experiment(cfg);
    bool pass = true;
    for (std::size_t i = 0; i < r1.replications.size(); ++i)
      pass = pass && r1.replications[i].methods[0].att == r2.replications[i].methods[0].att &&
             r1.replications[i].methods[0].se == r2.replications[i].methods[0].se;
    sub("determinism-under-fixed-seeds", pass);
  }

  {  // copula correlation of the underlying uniforms
    std::mt19937_64 rng(derive_seed(kSeed, 95));
    Eigen::MatrixXd x = generate_covariates(100000, 0.2, rng);
    Eigen::MatrixXd x0 = generate_covariates(100000, 0.0, rng);
    auto pearson = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      double ma = a.mean(), mb = b.mean();
      return ((a.array() - ma) * (b.array() - mb)).sum() /
             std::sqrt((a.array() - ma).square().sum() * (b.array() - mb).square().sum());
    };
    bool pass = true;
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        pass = pass && std::fabs(pearson(x.col(a), x.col(b)) - 0.2) < 0.02;
        pass = pass && std::fabs(pearson(x0.col(a), x0.col(b))) < 0.02;
      }
    sub("copula-correlation", pass);
  }

  {  // exposure-model recovery at n = 1e6 within +-0.02
    SimScenario sc = preset_scenario("ratio_1_2", 1000000);
    Cohort c = generate_cohort(sc, derive_seed(kSeed, 96));
    Eigen::MatrixXd x(c.subjects.size(), 6);
    Eigen::VectorXd y(c.subjects.size());
    for (std::size_t i = 0; i < c.subjects.size(); ++i) {
      for (int j = 0; j < 6; ++j)
        x(static_cast<Eigen::Index>(i), j) = c.subjects[i].covariates[static_cast<std::size_t>(j)];
      y[static_cast<Eigen::Index>(i)] = c.subjects[i].exposure;
    }
    LogisticFit fit = fit_weighted_logistic(y, x, Eigen::VectorXd::Ones(x.rows()));
    bool pass = fit.converged && std::fabs(fit.coefficients[0] - sc.gamma0) < 0.02;
    for (int j = 0; j < 6; ++j)
      pass =
          pass && std::fabs(fit.coefficients[j + 1] - simgen_model::exposure_slopes[j]) < 0.02;
    sub("exposure-model-recovery", pass);
  }

  {  // exponential survival at fixed covariates (KS at the 1% level)
    SimScenario sc = preset_scenario("ratio_1_2");
    std::mt19937_64 rng(derive_seed(kSeed, 97));
    std::exponential_distribution<double> exp1(1.0);
    Eigen::MatrixXd x(1, 6);
    x << -0.4, 1.3, 0.1, 0.0, 1.0, 0.0;
    double h = sc.baseline_hazard * std::exp(hazard_log_relative(x, 0, 1));
    std::vector<double> draws(20000);
    for (auto& d : draws) d = exp1(rng) / h;
    std::sort(draws.begin(), draws.end());
    double n = static_cast<double>(draws.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      double f = 1.0 - std::exp(-h * draws[i]);
      dmax = std::max(dmax, std::fabs(f - static_cast<double>(i) / n));
      dmax = std::max(dmax, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
      p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * t * t);
    sub("exponential-ks", p > 0.01, fmt("(p=%.3f)", p));
  }

  {  // rho-weighted case-cohort fit tracks the full-cohort fit
    double acc = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
      SimScenario sc = preset_scenario("ratio_1_2", 100000);
      Cohort c = generate_cohort(sc, derive_seed(kSeed, 980 + static_cast<std::uint64_t>(r)));
      auto alphas = default_alphas(c.subjects, 4, EventDefinition::generalized);
      StudyConfig study;
      study.tau = c.tau;
      study.n_covariates = 6;
      study.n_continuous = 3;
      study.n_strata = 4;
      study.alpha = alphas;
      study.event_definition = EventDefinition::generalized;
      CaseCohortDraw draw =
          draw_case_cohort(c.subjects, study, derive_seed(kSeed, 980 + static_cast<std::uint64_t>(r)));

      auto fit_on = [](const std::vector<Subject>& subjects, bool use_rho) {
        Eigen::MatrixXd x(subjects.size(), 6);
        Eigen::VectorXd y(subjects.size()), w(subjects.size());
        for (std::size_t i = 0; i < subjects.size(); ++i) {
          for (int j = 0; j < 6; ++j)
            x(static_cast<Eigen::Index>(i), j) =
                subjects[i].covariates[static_cast<std::size_t>(j)];
          y[static_cast<Eigen::Index>(i)] = subjects[i].exposure;
          w[static_cast<Eigen::Index>(i)] = use_rho ? subjects[i].weight : 1.0;
        }
        return fit_weighted_logistic(y, x, w);
      };
      LogisticFit full = fit_on(c.subjects, false);
      LogisticFit cc = fit_on(draw.sample.subjects, true);
      acc += (full.coefficients - cc.coefficients).lpNorm<Eigen::Infinity>();
    }
    acc /= reps;
    sub("weighted-logistic-consistency", acc < 0.05, fmt("(mean max-diff %.4f)", acc));
  }

  {  // template matching improves mean |SMD| over the raw sample
    int improved = 0, total = 0;
    for (int r = 0; r < 50; ++r) {
      ExperimentConfig cfg;
      cfg.scenario = preset_scenario("ratio_1_2", 5000);
      cfg.methods = {AttMethod::ps_template};
      cfg.event_definition = EventDefinition::generalized;
      cfg.replications = 1;
      cfg.bootstrap_draws = 2;
      cfg.seed = derive_seed(kSeed, 9000 + static_cast<std::uint64_t>(r));
      ExperimentResult res = run_experiment(cfg);
      double pre = 0.0, post = 0.0;
      int npre = 0, npost = 0;
      for (const auto& b : res.example_balance) {
        if (b.undefined) continue;
        if (b.stage == "pre_match") {
          pre += std::fabs(b.value);
          ++npre;
        } else if (b.stage == "ps_template") {
          post += std::fabs(b.value);
          ++npost;
        }
      }
      if (npre == 0 || npost == 0) continue;
      ++total;
      if (post / npost < pre / npre) ++improved;
    }
    sub("template-balance-improvement", improved == total,
        fmt("(%d/%d replications improved)", improved, total));
  }

  {  // optimal matching never exceeds greedy
    std::mt19937_64 rng(derive_seed(kSeed, 99));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    bool pass = true;
    for (int t = 0; t < 40 && pass; ++t) {
      Eigen::MatrixXd cost(7, 12);
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 12; ++j) cost(i, j) = unif(rng);
      double greedy = 0.0;
      std::vector<char> used(12, 0);
      for (int i = 0; i < 7; ++i) {
        int bj = -1;
        for (int j = 0; j < 12; ++j)
          if (!used[static_cast<std::size_t>(j)] && (bj < 0 || cost(i, j) < cost(i, bj))) bj = j;
        used[static_cast<std::size_t>(bj)] = 1;
        greedy += cost(i, bj);
      }
      pass = solve_assignment(cost).total_cost <= greedy + 1e-12;
    }
    sub("optimal<=greedy", pass);
  }

  sub("table-block-present", !table_block.metrics.empty());

  {  // CLI end to end: identical config and seed give byte-identical
     // results.csv regardless of the worker count
    auto slurp = [](const std::string& path) {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    std::string base = std::string(CCRMST_CLI_PATH) +
                       " simulate --scenario ratio_1_3 --n-full 1500 --reps 3 --bootstrap 25"
                       " --method covar_template --seed 11 --event-def gde";
    int rc1 = std::system((base + " --threads 1 --out /tmp/ccrmst_det1 >/dev/null").c_str());
    int rc2 = std::system((base + " --threads 2 --out /tmp/ccrmst_det2 >/dev/null").c_str());
    bool pass = rc1 == 0 && rc2 == 0 &&
                slurp("/tmp/ccrmst_det1/results.csv") == slurp("/tmp/ccrmst_det2/results.csv") &&
                !slurp("/tmp/ccrmst_det1/results.csv").empty() &&
                slurp("/tmp/ccrmst_det1/replications.csv") ==
                    slurp("/tmp/ccrmst_det2/replications.csv");
    sub("cli-byte-determinism", pass);
  }

  report("criterion 9 (module property suite)", ok,
         ok ? "all module invariants hold" : detail.str());
}

void fixture_note() {
  AnalyzeConfig cfg;
  cfg.csv_path = std::string(CCRMST_TEST_DATA_DIR) + "/aric_like.csv";
  cfg.columns.covariates = {"age", "smoker", "diabetes", "bmi", "ldl",
                            "hdl", "trig",   "sbp",      "dbp", "htn"};
  cfg.columns.exposure = "crp";
  cfg.columns.strata = {"sex", "race_black", "age_gt55"};
  cfg.exposure_threshold = 3.0;
  cfg.tau = 2920.0;
  cfg.template_ratios = {5.0, 4.0};
  cfg.n_candidates = 75;
  cfg.bootstrap_draws = 100;
  cfg.seed = kSeed;
  try {
    AnalyzeResult r = analyze_dataset(cfg);
    int ok_rows = 0;
    for (const auto& row : r.rows)
      if (row.ok) ++ok_rows;
    double pre = 0.0, post = 0.0;
    int npre = 0, npost = 0;
    for (const auto& b : r.balance) {
      if (b.undefined) continue;
      if (b.stage == "pre_match") {
        pre += std::fabs(b.value);
        ++npre;
      } else if (b.stage == "covar_template@r5") {
        post += std::fabs(b.value);
        ++npost;
      }
    }
    bool ok = ok_rows == static_cast<int>(r.rows.size()) && r.rows.size() == 6 && npre > 0 &&
              npost > 0 && post / npost < pre / npre;
    report("note (dataset workflow on the shipped fixture)", ok,
           fmt("%d/%zu method rows ok, mean|SMD| %.3f -> %.3f after template matching",
               ok_rows, r.rows.size(), pre / std::max(npre, 1), post / std::max(npost, 1)));
  } catch (const std::exception& e) {
    report("note (dataset workflow on the shipped fixture)", false, e.what());
  }
}

}  // namespace

int main() {
  std::printf("acceptance suite (master seed %llu)\n",
              static_cast<unsigned long long>(kSeed));
  criterion_1_oracle();
  ExperimentResult table_block = run_table_block(
      EventDefinition::generalized, {AttMethod::covar_template, AttMethod::ps_template}, kSeed);
  criteria_2_4_10(table_block);
  criterion_3_no_template();
  criterion_5_assignment_oracle();
  criterion_6_logistic_oracle();
  criterion_7_unit_weight_reduction();
  criterion_8_horvitz_thompson();
  criterion_9_property_suite(table_block);
  fixture_note();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
