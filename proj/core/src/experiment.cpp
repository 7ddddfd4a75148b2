#include "ccrmst/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ccrmst/rng.hpp"

namespace ccrmst {

double ExperimentConfig::resolved_true_att() const {
  return std::isnan(true_att) ? scenario.true_att : true_att;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  if (methods.empty()) throw std::invalid_argument("config: method list is empty");
  if (replications < 1) throw std::invalid_argument("config: need at least one replication");
  if (bootstrap_draws < 2) throw std::invalid_argument("config: need at least two bootstrap draws");
  if (template_ratio <= 0.0) throw std::invalid_argument("config: template ratio must be positive");
  if (n_candidates < 1) throw std::invalid_argument("config: need at least one candidate template");
  if (resolved_true_att() == 0.0)
    throw std::invalid_argument("config: true ATT is zero; percent bias is undefined");
}

namespace {

bool is_ps(AttMethod m) { return m == AttMethod::ps_plain || m == AttMethod::ps_template; }
bool is_template(AttMethod m) {
  return m == AttMethod::ps_template || m == AttMethod::covar_template;
}

}  // namespace

SampleAnalysisOutput analyze_sample(const CaseCohortSample& sample,
                                    const SampleAnalysisOptions& options) {
  SampleAnalysisOutput out;
  out.methods.resize(options.methods.size());

  std::vector<Subject> exposed, unexposed;
  for (const Subject& s : sample.subjects)
    (s.exposure == 1 ? exposed : unexposed).push_back(s);
  const int n1 = static_cast<int>(exposed.size());
  const int n0 = static_cast<int>(unexposed.size());

  const bool need_ps =
      std::any_of(options.methods.begin(), options.methods.end(), [](AttMethod m) { return is_ps(m); });
  const bool need_covar = std::any_of(options.methods.begin(), options.methods.end(),
                                      [](AttMethod m) { return !is_ps(m); });

  std::vector<double> ps_exposed, ps_unexposed;
  if (need_ps && n1 > 0 && n0 > 0) {
    try {
      const auto n = static_cast<Eigen::Index>(sample.subjects.size());
      const auto p = static_cast<Eigen::Index>(sample.subjects.front().covariates.size());
      const auto extra = static_cast<Eigen::Index>(
          options.extra_propensity_columns.empty() ? 0
                                                   : options.extra_propensity_columns.front().size());
      Eigen::MatrixXd design(n, p + extra);
      Eigen::VectorXd y(n), w(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Subject& s = sample.subjects[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < p; ++j)
          design(i, j) = s.covariates[static_cast<std::size_t>(j)];
        for (Eigen::Index j = 0; j < extra; ++j)
          design(i, p + j) =
              options.extra_propensity_columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        y[i] = s.exposure;
        w[i] = s.weight;
      }
      out.propensity_fit = fit_weighted_logistic(y, design, w);
      if (!out.propensity_fit.converged)
        throw std::runtime_error(out.propensity_fit.separation_flag
                                     ? "propensity model separation"
                                     : "propensity model did not converge");
      out.propensity_ok = true;
      Eigen::VectorXd lp = design * out.propensity_fit.coefficients.tail(p + extra);
      lp.array() += out.propensity_fit.coefficients[0];
      std::size_t k = 0;
      for (const Subject& s : sample.subjects) {
        double phat = expit_stable(lp[static_cast<Eigen::Index>(k)]);
        (s.exposure == 1 ? ps_exposed : ps_unexposed).push_back(phat);
        ++k;
      }
    } catch (const std::exception& e) {
      out.propensity_ok = false;
      out.propensity_error = e.what();
    }
  }

  DistanceSpec covar_spec;
  bool covar_spec_ok = false;
  std::string covar_spec_error;
  if (need_covar && !sample.subjects.empty()) {
    try {
      covar_spec = make_mahalanobis_spec(sample.subjects, options.matching_covariate_indices);
      covar_spec_ok = true;
    } catch (const std::exception& e) {
      covar_spec_error = e.what();
    }
  }

  for (std::size_t mi = 0; mi < options.methods.size(); ++mi) {
    AttMethod method = options.methods[mi];
    ReplicationMethodResult& slot = out.methods[mi];
    try {
      if (n1 == 0) throw std::runtime_error("no exposed subjects in the sample");
      if (n0 == 0) throw std::runtime_error("no unexposed subjects in the sample");
      if (is_ps(method) && !out.propensity_ok)
        throw std::runtime_error("propensity fit unavailable: " + out.propensity_error);
      if (!is_ps(method) && !covar_spec_ok)
        throw std::runtime_error("matching covariance unavailable: " + covar_spec_error);

      const DistanceSpec spec = is_ps(method) ? make_propensity_spec() : covar_spec;
      Eigen::MatrixXd exposed_features = matching_features(exposed, ps_exposed, spec);
      Eigen::MatrixXd unexposed_features = matching_features(unexposed, ps_unexposed, spec);

      std::vector<Subject> template_subjects;
      std::vector<double> template_propensity;
      Eigen::MatrixXd template_features;
      int template_id = -1;
      if (is_template(method)) {
        int m = static_cast<int>(std::lround(static_cast<double>(n0) / options.template_ratio));
        m = std::max(m, 1);
        if (m >= n1)
          throw std::runtime_error("template size " + std::to_string(m) +
                                   " is not below the exposed count " + std::to_string(n1));
        auto candidates = draw_templates(
            n1, m, options.n_candidates,
            derive_seed(options.seed, 50 + static_cast<std::uint64_t>(mi)));
        template_id = select_template(candidates, exposed_features);
        const auto& chosen = candidates[static_cast<std::size_t>(template_id)];
        template_features.resize(m, exposed_features.cols());
        for (int i = 0; i < m; ++i) {
          template_subjects.push_back(exposed[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])]);
          if (is_ps(method))
            template_propensity.push_back(ps_exposed[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])]);
          template_features.row(i) = exposed_features.row(chosen[static_cast<std::size_t>(i)]);
        }
      } else {
        if (n0 < n1)
          throw std::runtime_error("matching without a template needs at least as many "
                                   "unexposed as exposed subjects (n0=" +
                                   std::to_string(n0) + ", n1=" + std::to_string(n1) + ")");
        template_subjects = exposed;
        template_propensity = ps_exposed;
        template_features = exposed_features;
      }

      MatchedPairSet pairs =
          optimal_match(template_subjects, unexposed, template_features, unexposed_features,
                        spec, template_propensity, is_ps(method) ? ps_unexposed : std::vector<double>{});
      pairs.template_id = template_id;

      PhiConfig phi_config;
      phi_config.predictor = is_ps(method) ? PhiPredictor::propensity : PhiPredictor::covariates;
      phi_config.alpha_convention = options.alpha_convention;
      phi_config.alpha = sample.alpha;
      phi_config.alpha_single = options.alpha_single;
      phi_config.event_definition = options.event_definition;
      phi_config.covariate_indices = options.matching_covariate_indices;

      AttResult result = estimate_att(
          pairs, phi_config, options.tau, options.event_definition, options.bootstrap_draws,
          derive_seed(options.seed, 90 + static_cast<std::uint64_t>(mi)), method,
          options.refit_phi, options.evaluate_phi_at_exposed, options.percentile_ci);

      slot.ok = true;
      slot.att = result.estimate.att;
      slot.se = result.estimate.se;
      slot.ci_low = result.estimate.ci_low;
      slot.ci_high = result.estimate.ci_high;
      slot.n_pairs = result.estimate.n_pairs;
      slot.bootstrap_missing = result.bootstrap_missing;
      slot.phi_min = result.phi_min;
      slot.phi_max = result.phi_max;
      out.detail_index.push_back(static_cast<int>(mi));
      out.details.push_back(std::move(result));
      out.pair_sets.push_back(std::move(pairs));
    } catch (const std::exception& e) {
      slot.ok = false;
      slot.error = e.what();
    }
  }
  return out;
}

namespace {

ReplicationResult run_replication_impl(const ExperimentConfig& config, int replication,
                                       SampleAnalysisOutput* details_out,
                                       CaseCohortSample* sample_out = nullptr) {
  ReplicationResult rep;
  rep.replication = replication;
  rep.methods.resize(config.methods.size());
  const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(replication));
  try {
    Cohort cohort = generate_cohort(config.scenario, rep_seed);
    std::vector<double> alphas =
        default_alphas(cohort.subjects, 4, config.event_definition);
    StudyConfig study;
    study.tau = cohort.tau;
    study.n_covariates = simgen_model::n_covariates;
    study.n_continuous = simgen_model::n_continuous;
    study.n_strata = 4;
    study.alpha = alphas;
    study.event_definition = config.event_definition;
    study.validate();
    CaseCohortDraw draw = draw_case_cohort(cohort.subjects, study, rep_seed);

    SampleAnalysisOptions options;
    options.methods = config.methods;
    options.event_definition = config.event_definition;
    options.tau = cohort.tau;
    options.template_ratio = config.template_ratio;
    options.n_candidates = config.n_candidates;
    options.bootstrap_draws = config.bootstrap_draws;
    options.alpha_convention = config.alpha_convention;
    options.alpha_single = pooled_alpha(cohort.subjects, alphas, 4);
    options.refit_phi = config.refit_phi;
    options.evaluate_phi_at_exposed = config.evaluate_phi_at_exposed;
    options.percentile_ci = config.percentile_ci;
    options.seed = rep_seed;

    SampleAnalysisOutput analysis = analyze_sample(draw.sample, options);
    rep.ok = true;
    rep.tau = cohort.tau;
    rep.n_sample = static_cast<int>(draw.sample.subjects.size());
    rep.n_exposed = draw.sample.n_exposed;
    rep.n_unexposed = draw.sample.n_unexposed;
    rep.methods = analysis.methods;
    if (details_out != nullptr) *details_out = std::move(analysis);
    if (sample_out != nullptr) *sample_out = std::move(draw.sample);
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.error = e.what();
  }
  return rep;
}

}  // namespace

ReplicationResult run_replication(const ExperimentConfig& config, int replication) {
  return run_replication_impl(config, replication, nullptr);
}

MethodMetrics aggregate_metrics(AttMethod method, EventDefinition def, double true_att,
                                const std::vector<ReplicationResult>& replications,
                                int method_index) {
  MethodMetrics m;
  m.method = method;
  m.event_definition = def;
  m.true_att = true_att;

  double sum_att = 0.0, sum_se = 0.0;
  int covered = 0;
  std::vector<double> atts;
  for (const auto& rep : replications) {
    const auto k = static_cast<std::size_t>(method_index);
    if (!rep.ok || !rep.methods[k].ok) {
      ++m.n_failed;
      continue;
    }
    const auto& r = rep.methods[k];
    sum_att += r.att;
    sum_se += r.se;
    atts.push_back(r.att);
    if (r.ci_low <= true_att && true_att <= r.ci_high) ++covered;
  }
  m.n_used = static_cast<int>(atts.size());
  if (m.n_used == 0) {
    m.mean_att = m.pct_bias = m.sem = m.see = m.coverage =
        std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.mean_att = sum_att / m.n_used;
  m.pct_bias = 100.0 * (m.mean_att - true_att) / true_att;
  m.sem = sum_se / m.n_used;
  m.coverage = static_cast<double>(covered) / m.n_used;
  if (m.n_used >= 2) {
    double ss = 0.0;
    for (double a : atts) ss += (a - m.mean_att) * (a - m.mean_att);
    m.see = std::sqrt(ss / (m.n_used - 1));
  } else {
    m.see = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const int R = config.replications;
  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = std::min(threads, R);

  ExperimentResult result;
  result.replications.resize(static_cast<std::size_t>(R));
  SampleAnalysisOutput first_details;
  CaseCohortSample first_sample;

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) {
      result.replications[static_cast<std::size_t>(r)] = run_replication_impl(
          config, r, r == 0 ? &first_details : nullptr, r == 0 ? &first_sample : nullptr);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const double true_att = config.resolved_true_att();
  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    MethodMetrics metrics =
        aggregate_metrics(config.methods[mi], config.event_definition, true_att,
                          result.replications, static_cast<int>(mi));
    if (static_cast<double>(metrics.n_failed) >
        config.max_failure_fraction * static_cast<double>(R)) {
      std::string diag = "method " + to_string(config.methods[mi]) + ": " +
                         std::to_string(metrics.n_failed) + " of " + std::to_string(R) +
                         " replications failed;";
      int listed = 0;
      for (const auto& rep : result.replications) {
        const auto k = static_cast<std::size_t>(mi);
        if (rep.ok && rep.methods[k].ok) continue;
        if (listed++ == 5) {
          diag += " ...";
          break;
        }
        diag += " rep " + std::to_string(rep.replication) + " (seed stream " +
                std::to_string(rep.replication) + "): " +
                (rep.ok ? rep.methods[k].error : rep.error) + ";";
      }
      throw std::runtime_error("run_experiment aborted: " + diag);
    }
    result.metrics.push_back(metrics);
  }

  if (!first_sample.subjects.empty()) {
    std::vector<std::string> names;
    for (int j = 1; j <= simgen_model::n_covariates; ++j)
      names.push_back("x" + std::to_string(j));
    std::vector<Subject> exposed, unexposed;
    for (const Subject& s : first_sample.subjects)
      (s.exposure == 1 ? exposed : unexposed).push_back(s);
    if (!exposed.empty() && !unexposed.empty()) {
      Eigen::MatrixXd x1 = covariate_matrix(exposed);
      Eigen::MatrixXd x0 = covariate_matrix(unexposed);
      Eigen::VectorXd sd = pooled_sd(x1, x0);
      for (auto& row : balance_report(x1, x0, sd, names, "pre_match"))
        result.example_balance.push_back(std::move(row));
      for (std::size_t d = 0; d < first_details.details.size(); ++d) {
        AttMethod method = config.methods[static_cast<std::size_t>(first_details.detail_index[d])];
        const MatchedPairSet& pairs = first_details.pair_sets[d];
        std::vector<Subject> pe, pu;
        for (const auto& p : pairs.pairs) {
          pe.push_back(p.exposed);
          pu.push_back(p.unexposed);
        }
        for (auto& row : balance_report(covariate_matrix(pe), covariate_matrix(pu), sd, names,
                                        to_string(method)))
          result.example_balance.push_back(std::move(row));
      }
    }
  }

  for (std::size_t d = 0; d < first_details.details.size(); ++d) {
    MethodCurves curves;
    curves.method = config.methods[static_cast<std::size_t>(first_details.detail_index[d])];
    curves.treated = first_details.details[d].hazard_treated;
    curves.control = first_details.details[d].hazard_control;
    result.example_curves.push_back(std::move(curves));
  }
  return result;
}

}  // namespace ccrmst
