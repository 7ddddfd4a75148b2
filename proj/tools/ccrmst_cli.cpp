// Command-line front end: simulation experiments, case-cohort dataset
// analysis, scenario calibration, and the Monte Carlo ATT oracle.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccrmst/analyze.hpp"
#include "ccrmst/experiment.hpp"
#include "ccrmst/io.hpp"
#include "ccrmst/rng.hpp"

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  in >> j;
  return j;
}

ccrmst::EventDefinition event_def_from_string(const std::string& s) {
  if (s == "conv" || s == "conventional") return ccrmst::EventDefinition::conventional;
  if (s == "gde" || s == "generalized") return ccrmst::EventDefinition::generalized;
  throw std::runtime_error("unknown event definition '" + s + "' (use conv or gde)");
}

ccrmst::AlphaConvention alpha_convention_from_string(const std::string& s) {
  if (s == "stratum") return ccrmst::AlphaConvention::stratum;
  if (s == "single") return ccrmst::AlphaConvention::single;
  throw std::runtime_error("unknown alpha convention '" + s + "' (use stratum or single)");
}

std::vector<ccrmst::AttMethod> methods_from_strings(const std::vector<std::string>& names) {
  std::vector<ccrmst::AttMethod> methods;
  for (const auto& n : names) methods.push_back(ccrmst::att_method_from_string(n));
  return methods;
}

ccrmst::SimScenario scenario_from_json(const json& j, int n_full) {
  if (j.is_string()) return ccrmst::preset_scenario(j.get<std::string>(), n_full);
  ccrmst::SimScenario s;
  s.name = j.value("name", "custom");
  s.n_full = j.value("n_full", n_full);
  s.controls_per_exposed = j.value("controls_per_exposed", 2);
  s.gamma0 = j.at("gamma0").get<double>();
  s.baseline_hazard = j.at("baseline_hazard").get<double>();
  s.censor_hazard = j.at("censor_hazard").get<double>();
  s.copula_corr = j.value("copula_corr", 0.2);
  s.true_att = j.value("true_att", 0.0);
  return s;
}

json scenario_to_json(const ccrmst::SimScenario& s) {
  return json{{"name", s.name},
              {"n_full", s.n_full},
              {"controls_per_exposed", s.controls_per_exposed},
              {"gamma0", s.gamma0},
              {"baseline_hazard", s.baseline_hazard},
              {"censor_hazard", s.censor_hazard},
              {"copula_corr", s.copula_corr},
              {"true_att", s.true_att}};
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty()) return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config_path;
  std::string scenario;  // empty = from config, else preset name
  int n_full = 0;
  std::vector<std::string> methods;
  std::string event_def;
  int replications = 0;
  int bootstrap = 0;
  double template_ratio = 0.0;
  int candidates = 0;
  std::uint64_t seed = std::uint64_t(-1);
  int threads = -1;
  std::string out_dir;
  bool export_data = false;
};

int run_simulate(const SimulateArgs& args) {
  json cfg = args.config_path.empty() ? json::object() : load_json(args.config_path);

  ccrmst::ExperimentConfig config;
  int n_full = args.n_full > 0 ? args.n_full : cfg.value("n_full", 5000);
  json scenario_json;
  if (!args.scenario.empty())
    scenario_json = json(args.scenario);  // flag wins over config
  else if (cfg.contains("scenario"))
    scenario_json = cfg["scenario"];
  else
    scenario_json = json("ratio_1_2");
  config.scenario = scenario_from_json(scenario_json, n_full);

  std::vector<std::string> method_names =
      !args.methods.empty() ? args.methods
                            : cfg.value("methods", std::vector<std::string>{"ps_template",
                                                                            "covar_template"});
  config.methods = methods_from_strings(method_names);
  config.event_definition =
      event_def_from_string(!args.event_def.empty() ? args.event_def : cfg.value("event_definition", std::string("gde")));
  config.replications = args.replications > 0 ? args.replications : cfg.value("replications", 400);
  config.bootstrap_draws = args.bootstrap > 0 ? args.bootstrap : cfg.value("bootstrap", 500);
  config.template_ratio =
      args.template_ratio > 0.0 ? args.template_ratio : cfg.value("template_ratio", 5.0);
  config.n_candidates = args.candidates > 0 ? args.candidates : cfg.value("candidates", 50);
  config.seed = args.seed != std::uint64_t(-1) ? args.seed : cfg.value("seed", std::uint64_t{1});
  config.threads = args.threads >= 0 ? args.threads : cfg.value("threads", 0);
  config.alpha_convention =
      alpha_convention_from_string(cfg.value("alpha_convention", std::string("stratum")));
  config.refit_phi = cfg.value("refit_phi", true);
  config.evaluate_phi_at_exposed = cfg.value("evaluate_phi_at_exposed", false);
  config.percentile_ci = cfg.value("percentile_ci", false);
  config.max_failure_fraction = cfg.value("max_failure_fraction", 0.02);
  if (cfg.contains("true_att")) config.true_att = cfg["true_att"].get<double>();

  std::string out_dir = !args.out_dir.empty() ? args.out_dir : cfg.value("out", std::string("."));
  ccrmst::ensure_directory(out_dir);

  ccrmst::ExperimentResult result = ccrmst::run_experiment(config);

  ccrmst::write_metrics_csv(join_path(out_dir, "results.csv"), config, result);
  ccrmst::write_replications_csv(join_path(out_dir, "replications.csv"), config, result);
  ccrmst::write_balance_csv(join_path(out_dir, "balance.csv"), result.example_balance);
  std::vector<ccrmst::LabeledCurve> curves;
  for (const auto& c : result.example_curves) {
    curves.push_back({ccrmst::to_string(c.method), "treated", c.treated});
    curves.push_back({ccrmst::to_string(c.method), "control", c.control});
  }
  ccrmst::write_survival_curves_csv(join_path(out_dir, "survival_curves.csv"), curves);

  json metrics = json::array();
  for (const auto& m : result.metrics) {
    metrics.push_back({{"method", ccrmst::to_string(m.method)},
                       {"event_definition", ccrmst::to_string(m.event_definition)},
                       {"true_att", m.true_att},
                       {"n_used", m.n_used},
                       {"n_failed", m.n_failed},
                       {"mean_att", m.mean_att},
                       {"pct_bias", m.pct_bias},
                       {"sem", m.sem},
                       {"see", std::isnan(m.see) ? json() : json(m.see)},
                       {"coverage_pct", std::isnan(m.coverage) ? json() : json(100.0 * m.coverage)}});
  }
  json provenance{
      {"schema_version", kSchemaVersion},
      {"tool", "ccrmst"},
      {"version", kVersion},
      {"command", "simulate"},
      {"config",
       {{"scenario", scenario_to_json(config.scenario)},
        {"methods", method_names},
        {"event_definition", ccrmst::to_string(config.event_definition)},
        {"replications", config.replications},
        {"bootstrap", config.bootstrap_draws},
        {"template_ratio", config.template_ratio},
        {"candidates", config.n_candidates},
        {"seed", config.seed},
        {"threads", config.threads},
        {"alpha_convention",
         config.alpha_convention == ccrmst::AlphaConvention::stratum ? "stratum" : "single"},
        {"refit_phi", config.refit_phi},
        {"percentile_ci", config.percentile_ci},
        {"true_att", config.resolved_true_att()}}},
      {"metrics", metrics},
      {"warnings", result.warnings}};
  std::ofstream(join_path(out_dir, "results.json")) << provenance.dump(2) << '\n';

  if (args.export_data) {
    ccrmst::Cohort cohort =
        ccrmst::generate_cohort(config.scenario, ccrmst::derive_seed(config.seed, 0));
    auto alphas = ccrmst::default_alphas(cohort.subjects, 4, config.event_definition);
    ccrmst::StudyConfig study;
    study.tau = cohort.tau;
    study.n_covariates = 6;
    study.n_continuous = 3;
    study.n_strata = 4;
    study.alpha = alphas;
    study.event_definition = config.event_definition;
    ccrmst::CaseCohortDraw draw =
        ccrmst::draw_case_cohort(cohort.subjects, study, ccrmst::derive_seed(config.seed, 0));
    ccrmst::write_cohort_csv(join_path(out_dir, "cohort.csv"), cohort.subjects, &draw.xi,
                             &draw.rho);
    ccrmst::write_case_cohort_csv(join_path(out_dir, "case_cohort.csv"), draw.sample);
  }

  std::cout << "scenario " << config.scenario.name << " (N=" << config.scenario.n_full
            << "), event definition " << ccrmst::to_string(config.event_definition) << ", R="
            << config.replications << ", B=" << config.bootstrap_draws << "\n";
  std::cout << "method            pct_bias      sem      see       cp\n";
  for (const auto& m : result.metrics) {
    std::printf("%-16s %9.3f %8.5f %8.5f %8.1f\n", ccrmst::to_string(m.method).c_str(),
                m.pct_bias, m.sem, m.see, 100.0 * m.coverage);
  }
  std::cout << "outputs written to " << out_dir << "\n";
  return 0;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string config_path;
  std::string csv_path;
  double tau = 0.0;
  double exposure_threshold = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> methods;
  std::string event_def;
  std::vector<double> template_ratios;
  int candidates = 0;
  int bootstrap = 0;
  std::uint64_t seed = std::uint64_t(-1);
  std::string out_dir;
};

int run_analyze(const AnalyzeArgs& args) {
  json cfg = args.config_path.empty() ? json::object() : load_json(args.config_path);

  ccrmst::AnalyzeConfig config;
  config.csv_path = !args.csv_path.empty() ? args.csv_path : cfg.value("csv", std::string());
  if (cfg.contains("columns")) {
    const json& c = cfg["columns"];
    config.columns.id = c.value("id", std::string("id"));
    config.columns.covariates = c.value("covariates", std::vector<std::string>{});
    config.columns.exposure = c.value("exposure", std::string("exposure"));
    config.columns.time = c.value("time", std::string("time"));
    config.columns.event = c.value("event", std::string("event"));
    config.columns.strata = c.value("strata", std::vector<std::string>{});
    config.columns.xi = c.value("xi", std::string("xi"));
    config.columns.rho = c.value("rho", std::string("rho"));
  } else {
    // Default mapping matching our own case-cohort exports.
    config.columns.covariates = {"x1", "x2", "x3", "x4", "x5", "x6"};
    config.columns.exposure = "a";
    config.columns.event = "delta";
    config.columns.strata = {"stratum"};
  }
  if (args.tau > 0.0)
    config.tau = args.tau;
  else if (cfg.contains("tau"))
    config.tau = cfg["tau"].get<double>();
  if (!std::isnan(args.exposure_threshold))
    config.exposure_threshold = args.exposure_threshold;
  else if (cfg.contains("exposure_threshold"))
    config.exposure_threshold = cfg["exposure_threshold"].get<double>();
  if (!args.methods.empty() || cfg.contains("methods"))
    config.methods = methods_from_strings(
        !args.methods.empty() ? args.methods : cfg["methods"].get<std::vector<std::string>>());
  config.event_definition = event_def_from_string(
      !args.event_def.empty() ? args.event_def : cfg.value("event_definition", std::string("conv")));
  if (!args.template_ratios.empty())
    config.template_ratios = args.template_ratios;
  else if (cfg.contains("template_ratios"))
    config.template_ratios = cfg["template_ratios"].get<std::vector<double>>();
  config.n_candidates = args.candidates > 0 ? args.candidates : cfg.value("candidates", 50);
  config.bootstrap_draws = args.bootstrap > 0 ? args.bootstrap : cfg.value("bootstrap", 500);
  config.alpha_convention =
      alpha_convention_from_string(cfg.value("alpha_convention", std::string("stratum")));
  config.include_strata_in_propensity = cfg.value("include_strata_in_propensity", true);
  config.refit_phi = cfg.value("refit_phi", true);
  config.evaluate_phi_at_exposed = cfg.value("evaluate_phi_at_exposed", false);
  config.percentile_ci = cfg.value("percentile_ci", false);
  config.seed = args.seed != std::uint64_t(-1) ? args.seed : cfg.value("seed", std::uint64_t{1});
  if (cfg.contains("alpha_by_stratum"))
    config.alpha_by_stratum = cfg["alpha_by_stratum"].get<std::vector<double>>();

  std::string out_dir = !args.out_dir.empty() ? args.out_dir : cfg.value("out", std::string("."));
  ccrmst::ensure_directory(out_dir);

  ccrmst::AnalyzeResult result = ccrmst::analyze_dataset(config);

  // ATT table in the layout of the dataset workflow: one row per method and
  // template ratio.
  std::vector<std::vector<std::string>> att_rows;
  for (const auto& r : result.rows) {
    att_rows.push_back({ccrmst::to_string(r.method),
                        std::isnan(r.template_ratio) ? "none"
                                                     : ccrmst::format_number(r.template_ratio),
                        r.ok ? "1" : "0", r.ok ? ccrmst::format_number(r.estimate.att) : "NA",
                        r.ok ? ccrmst::format_number(r.estimate.se) : "NA",
                        r.ok ? ccrmst::format_number(r.estimate.ci_low) : "NA",
                        r.ok ? ccrmst::format_number(r.estimate.ci_high) : "NA",
                        r.ok ? std::to_string(r.estimate.n_pairs) : "NA",
                        r.ok ? ccrmst::format_number(r.estimate.rmst_treated) : "NA",
                        r.ok ? ccrmst::format_number(r.estimate.rmst_control) : "NA",
                        r.ok ? "" : r.error});
  }
  ccrmst::write_csv(join_path(out_dir, "att_results.csv"),
                    {"method", "template_ratio", "ok", "att", "se", "ci_low", "ci_high",
                     "n_pairs", "rmst_treated", "rmst_control", "error"},
                    att_rows);
  ccrmst::write_balance_csv(join_path(out_dir, "balance.csv"), result.balance);
  ccrmst::write_survival_curves_csv(join_path(out_dir, "survival_curves.csv"), result.curves);

  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back(
        {{"method", ccrmst::to_string(r.method)},
         {"template_ratio", std::isnan(r.template_ratio) ? json() : json(r.template_ratio)},
         {"ok", r.ok},
         {"att", r.ok ? json(r.estimate.att) : json()},
         {"se", r.ok ? json(r.estimate.se) : json()},
         {"ci_low", r.ok ? json(r.estimate.ci_low) : json()},
         {"ci_high", r.ok ? json(r.estimate.ci_high) : json()},
         {"n_pairs", r.ok ? json(r.estimate.n_pairs) : json()},
         {"phi_min", r.ok ? json(r.phi_min) : json()},
         {"phi_max", r.ok ? json(r.phi_max) : json()},
         {"bootstrap_missing", r.ok ? json(r.bootstrap_missing) : json()},
         {"error", r.error}});
  }
  json provenance{{"schema_version", kSchemaVersion},
                  {"tool", "ccrmst"},
                  {"version", kVersion},
                  {"command", "analyze"},
                  {"config",
                   {{"csv", config.csv_path},
                    {"tau", result.tau},
                    {"event_definition", ccrmst::to_string(config.event_definition)},
                    {"template_ratios", config.template_ratios},
                    {"candidates", config.n_candidates},
                    {"bootstrap", config.bootstrap_draws},
                    {"seed", config.seed}}},
                  {"data",
                   {{"n_rows", result.n_rows},
                    {"n_exposed", result.n_exposed},
                    {"n_unexposed", result.n_unexposed},
                    {"n_strata", result.n_strata},
                    {"alpha", result.alpha},
                    {"alpha_single", result.alpha_single},
                    {"tau", result.tau}}},
                  {"results", rows},
                  {"warnings", result.warnings}};
  std::ofstream(join_path(out_dir, "results.json")) << provenance.dump(2) << '\n';

  std::cout << "n=" << result.n_rows << " (exposed " << result.n_exposed << ", unexposed "
            << result.n_unexposed << "), strata " << result.n_strata << ", tau "
            << ccrmst::format_number(result.tau) << "\n";
  std::cout << "method            ratio        att         se               95% CI\n";
  for (const auto& r : result.rows) {
    if (r.ok) {
      std::printf("%-16s %6s %10.4g %10.4g   [%10.4g, %10.4g]\n",
                  ccrmst::to_string(r.method).c_str(),
                  std::isnan(r.template_ratio)
                      ? "none"
                      : ccrmst::format_number(r.template_ratio).c_str(),
                  r.estimate.att, r.estimate.se, r.estimate.ci_low, r.estimate.ci_high);
    } else {
      std::printf("%-16s failed: %s\n", ccrmst::to_string(r.method).c_str(), r.error.c_str());
    }
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "outputs written to " << out_dir << "\n";
  return 0;
}

// --------------------------------------------------------------- calibrate

int run_calibrate(const std::vector<int>& ratios, std::int64_t n_pilot, std::int64_t n_oracle,
                  std::uint64_t seed, int threads, const std::string& out_path,
                  bool keep_unit_scale) {
  json out = json::array();
  for (int ratio : ratios) {
    double target = 0.0;
    if (!keep_unit_scale) {
      // Rescale so the true ATT matches the frozen preset target.
      target = ccrmst::preset_scenario("ratio_1_" + std::to_string(ratio)).true_att;
    }
    ccrmst::CalibrationResult r =
        ccrmst::calibrate_scenario(ratio, target, seed, n_pilot, n_oracle, threads);
    std::printf(
        "ratio 1:%d  gamma0=%.6f h0=%.8g censor=%.8g  exposure=%.4f conv=%.4f gde=%.4f  "
        "att=%.6g (mc se %.2g) tau=%.5g\n",
        ratio, r.scenario.gamma0, r.scenario.baseline_hazard, r.scenario.censor_hazard,
        r.achieved_exposure_fraction, r.achieved_event_rate_conventional,
        r.achieved_event_rate_generalized, r.achieved_true_att, r.true_att_mc_se,
        r.tau_population);
    out.push_back({{"ratio", ratio},
                   {"scenario", scenario_to_json(r.scenario)},
                   {"achieved",
                    {{"exposure_fraction", r.achieved_exposure_fraction},
                     {"event_rate_conventional", r.achieved_event_rate_conventional},
                     {"event_rate_generalized", r.achieved_event_rate_generalized},
                     {"true_att", r.achieved_true_att},
                     {"true_att_mc_se", r.true_att_mc_se},
                     {"tau", r.tau_population}}}});
  }
  if (!out_path.empty()) {
    std::ofstream(out_path) << out.dump(2) << '\n';
    std::cout << "calibration written to " << out_path << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------ oracle

int run_oracle(const std::string& scenario_name, std::int64_t n_mc, std::uint64_t seed,
               int threads, const std::string& out_path) {
  ccrmst::SimScenario scenario = ccrmst::preset_scenario(scenario_name);
  ccrmst::OracleResult r = ccrmst::true_att_oracle(scenario, n_mc, seed, threads);
  std::printf("scenario %s: att=%.6g (mc se %.3g), preset true=%.6g, tau=%.5g\n",
              scenario.name.c_str(), r.att, r.mc_se, scenario.true_att, r.tau);
  std::printf("exposure fraction %.4f, event rates: conventional %.4f, generalized %.4f\n",
              r.exposure_fraction, r.event_rate_conventional, r.event_rate_generalized);
  if (!out_path.empty()) {
    json j{{"scenario", scenario_to_json(scenario)},
           {"n_mc", n_mc},
           {"seed", seed},
           {"att", r.att},
           {"mc_se", r.mc_se},
           {"tau", r.tau},
           {"exposure_fraction", r.exposure_fraction},
           {"event_rate_conventional", r.event_rate_conventional},
           {"event_rate_generalized", r.event_rate_generalized}};
    std::ofstream(out_path) << j.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATT estimation on restricted mean survival time for stratified "
               "case-cohort studies with template matching"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a simulation experiment");
  simulate->add_option("--config", sim.config_path, "JSON config file");
  simulate->add_option("--scenario", sim.scenario, "scenario preset (ratio_1_2, ratio_1_3, ratio_1_4)");
  simulate->add_option("--n-full", sim.n_full, "full cohort size");
  simulate->add_option("--reps", sim.replications, "number of replications");
  simulate->add_option("--bootstrap", sim.bootstrap, "bootstrap draws per replication");
  simulate->add_option("--method", sim.methods,
                       "methods: ps_plain ps_template covar_plain covar_template (repeatable)");
  simulate->add_option("--event-def", sim.event_def, "event definition: conv or gde");
  simulate->add_option("--template-ratio", sim.template_ratio, "unexposed-to-template ratio");
  simulate->add_option("--candidates", sim.candidates, "candidate templates drawn");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--threads", sim.threads, "worker threads (0 = all cores)");
  simulate->add_option("--out", sim.out_dir, "output directory");
  simulate->add_flag("--export-data", sim.export_data,
                     "also write cohort.csv / case_cohort.csv for the first replication");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "analyze a case-cohort CSV dataset");
  analyze->add_option("--config", ana.config_path, "JSON config file with the column mapping");
  analyze->add_option("--csv", ana.csv_path, "input CSV path");
  analyze->add_option("--tau", ana.tau, "truncation time (default: 80th percentile)");
  analyze->add_option("--exposure-threshold", ana.exposure_threshold,
                      "dichotomize a continuous exposure column at this value");
  analyze->add_option("--method", ana.methods, "methods (repeatable)");
  analyze->add_option("--event-def", ana.event_def, "event definition: conv or gde");
  analyze->add_option("--template-ratio", ana.template_ratios,
                      "unexposed-to-template ratio (repeatable for sensitivity)");
  analyze->add_option("--candidates", ana.candidates, "candidate templates drawn");
  analyze->add_option("--bootstrap", ana.bootstrap, "bootstrap draws");
  analyze->add_option("--seed", ana.seed, "master seed");
  analyze->add_option("--out", ana.out_dir, "output directory");

  std::vector<int> cal_ratios{2, 3, 4};
  std::int64_t cal_pilot = 4000000, cal_oracle = 10000000;
  std::uint64_t cal_seed = 20240901;
  int cal_threads = 0;
  std::string cal_out;
  bool cal_unit_scale = false;
  auto* calibrate = app.add_subcommand("calibrate", "recompute scenario constants from scratch");
  calibrate->add_option("--ratio", cal_ratios, "controls per exposed (repeatable; default 2 3 4)");
  calibrate->add_option("--pilot", cal_pilot, "pilot sample size for bisection");
  calibrate->add_option("--oracle", cal_oracle, "oracle sample size per batch");
  calibrate->add_option("--seed", cal_seed, "calibration seed");
  calibrate->add_option("--threads", cal_threads, "worker threads (0 = all cores)");
  calibrate->add_option("--out", cal_out, "write calibration JSON here");
  calibrate->add_flag("--unit-scale", cal_unit_scale,
                      "keep censor hazard at 1 instead of rescaling to the preset ATT");

  std::string orc_scenario = "ratio_1_2";
  std::int64_t orc_n = 10000000;
  std::uint64_t orc_seed = 1;
  int orc_threads = 0;
  std::string orc_out;
  auto* oracle = app.add_subcommand("oracle", "Monte Carlo true-ATT computation");
  oracle->add_option("--scenario", orc_scenario, "scenario preset");
  oracle->add_option("--n-mc", orc_n, "Monte Carlo sample size");
  oracle->add_option("--seed", orc_seed, "seed");
  oracle->add_option("--threads", orc_threads, "worker threads (0 = all cores)");
  oracle->add_option("--out", orc_out, "write oracle JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (simulate->parsed()) return run_simulate(sim);
    if (analyze->parsed()) return run_analyze(ana);
    if (calibrate->parsed())
      return run_calibrate(cal_ratios, cal_pilot, cal_oracle, cal_seed,
                           cal_threads > 0 ? cal_threads : hw, cal_out, cal_unit_scale);
    if (oracle->parsed())
      return run_oracle(orc_scenario, orc_n, orc_seed, orc_threads > 0 ? orc_threads : hw,
                        orc_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
