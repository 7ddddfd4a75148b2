#include "ccrmst/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ccrmst/rng.hpp"

namespace ccrmst {

void AnalyzeConfig::validate() const {
  if (csv_path.empty()) throw std::invalid_argument("analyze: csv path is required");
  if (columns.covariates.empty())
    throw std::invalid_argument("analyze: at least one covariate column is required");
  if (methods.empty()) throw std::invalid_argument("analyze: method list is empty");
  if (template_ratios.empty())
    throw std::invalid_argument("analyze: at least one template ratio is required");
  for (double r : template_ratios)
    if (r <= 0.0) throw std::invalid_argument("analyze: template ratios must be positive");
  if (bootstrap_draws < 2) throw std::invalid_argument("analyze: need at least two bootstrap draws");
  if (n_candidates < 1) throw std::invalid_argument("analyze: need at least one candidate template");
  if (!std::isnan(tau) && tau <= 0.0) throw std::invalid_argument("analyze: tau must be positive");
}

namespace {

int binary_value(const std::string& s, const std::string& what, std::size_t row) {
  double v = parse_double(s, what, row);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw std::runtime_error("row " + std::to_string(row) + ": " + what + " must be 0 or 1, got '" +
                           s + "'");
}

}  // namespace

LoadedDataset load_dataset(const AnalyzeConfig& config) {
  config.validate();
  CsvTable table = read_csv(config.csv_path);
  const std::size_t n = table.rows.size();
  if (n == 0) throw std::runtime_error(config.csv_path + ": no data rows");

  std::vector<int> cov_cols;
  for (const auto& name : config.columns.covariates)
    cov_cols.push_back(table.require_column(name));
  int exposure_col = table.require_column(config.columns.exposure);
  int time_col = table.require_column(config.columns.time);
  int event_col = table.require_column(config.columns.event);
  int id_col = table.column(config.columns.id);
  int xi_col = table.column(config.columns.xi);
  int rho_col = table.column(config.columns.rho);
  std::vector<int> strata_cols;
  for (const auto& name : config.columns.strata)
    strata_cols.push_back(table.require_column(name));

  if (rho_col < 0 && config.alpha_by_stratum.empty())
    throw std::runtime_error(
        "analyze: either a rho column or per-stratum alphas must be provided");

  // Stratum labels from the combination of the strata columns.
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (strata_cols.empty()) {
      labels[i] = "all";
    } else {
      std::string label;
      for (std::size_t k = 0; k < strata_cols.size(); ++k) {
        if (k > 0) label += '|';
        label += table.rows[i][static_cast<std::size_t>(strata_cols[k])];
      }
      labels[i] = std::move(label);
    }
  }
  std::set<std::string> unique_labels(labels.begin(), labels.end());
  std::map<std::string, int> stratum_of;
  std::vector<std::string> stratum_labels;
  for (const auto& label : unique_labels) {
    stratum_of[label] = static_cast<int>(stratum_labels.size()) + 1;
    stratum_labels.push_back(label);
  }
  const int n_strata = static_cast<int>(stratum_labels.size());

  std::vector<double> times(n);
  std::vector<int> events(n), exposures(n), strata(n), xis(n);
  std::vector<double> rhos(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    const std::size_t row_no = i + 2;  // header is line 1
    times[i] = parse_double(row[static_cast<std::size_t>(time_col)], "time", row_no);
    if (times[i] < 0.0)
      throw std::runtime_error("row " + std::to_string(row_no) + ": negative time");
    events[i] = binary_value(row[static_cast<std::size_t>(event_col)], "event", row_no);
    double a_raw = parse_double(row[static_cast<std::size_t>(exposure_col)], "exposure", row_no);
    if (std::isnan(config.exposure_threshold)) {
      if (a_raw != 0.0 && a_raw != 1.0)
        throw std::runtime_error("row " + std::to_string(row_no) +
                                 ": exposure must be 0 or 1 (or set an exposure threshold)");
      exposures[i] = static_cast<int>(a_raw);
    } else {
      exposures[i] = a_raw > config.exposure_threshold ? 1 : 0;
    }
    strata[i] = stratum_of[labels[i]];
    xis[i] = xi_col >= 0
                 ? binary_value(row[static_cast<std::size_t>(xi_col)], "xi", row_no)
                 : (events[i] == 1 ? 0 : 1);
    rhos[i] = rho_col >= 0 ? parse_double(row[static_cast<std::size_t>(rho_col)], "rho", row_no)
                           : 0.0;
  }

  LoadedDataset out;
  out.n_strata = n_strata;
  out.stratum_labels = stratum_labels;
  out.covariate_names = config.columns.covariates;
  out.tau = config.tau;
  if (std::isnan(out.tau)) {
    std::vector<double> sorted = times;
    auto k = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(n)));
    if (k == 0) k = 1;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    out.tau = sorted[k - 1];
  }
  if (out.tau <= 0.0) throw std::runtime_error("analyze: computed tau is not positive");

  // Event flags under the analysis truncation time. The conventional flag is
  // the event column as recorded (the design's case status); the generalized
  // flag also counts subjects followed event-free past tau. Strictly past:
  // a record ending exactly at tau without an event is censored at tau.
  std::vector<int> gde(n);
  for (std::size_t i = 0; i < n; ++i)
    gde[i] = (events[i] == 1 || times[i] > out.tau) ? 1 : 0;

  auto case_flag = [&](std::size_t i) {
    return config.event_definition == EventDefinition::conventional ? events[i] : gde[i];
  };

  // Weights: either validated against (event, xi) or derived from alphas.
  std::vector<double> alpha(static_cast<std::size_t>(n_strata), 1.0);
  if (rho_col >= 0) {
    std::vector<double> seen_rho(static_cast<std::size_t>(n_strata), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row_no = i + 2;
      if (rhos[i] <= 0.0)
        throw std::runtime_error("row " + std::to_string(row_no) +
                                 ": rho must be positive for case-cohort members");
      if (case_flag(i) == 1) {
        if (std::abs(rhos[i] - 1.0) > 1e-9)
          throw std::runtime_error("row " + std::to_string(row_no) +
                                   ": cases must carry rho = 1, got " + std::to_string(rhos[i]));
      } else {
        if (xis[i] != 1)
          throw std::runtime_error("row " + std::to_string(row_no) +
                                   ": sampled non-case must have xi = 1");
        if (rhos[i] < 1.0)
          throw std::runtime_error("row " + std::to_string(row_no) +
                                   ": non-case rho must be at least 1");
        auto b = static_cast<std::size_t>(strata[i] - 1);
        if (seen_rho[b] == 0.0) {
          seen_rho[b] = rhos[i];
        } else if (std::abs(rhos[i] - seen_rho[b]) > 1e-6 * seen_rho[b]) {
          throw std::runtime_error("row " + std::to_string(row_no) +
                                   ": rho inconsistent within stratum '" +
                                   stratum_labels[b] + "' (" + std::to_string(rhos[i]) + " vs " +
                                   std::to_string(seen_rho[b]) + ")");
        }
      }
    }
    for (int b = 0; b < n_strata; ++b) {
      auto k = static_cast<std::size_t>(b);
      if (seen_rho[k] > 0.0) alpha[k] = 1.0 / seen_rho[k];
    }
  } else {
    if (static_cast<int>(config.alpha_by_stratum.size()) != n_strata)
      throw std::runtime_error("analyze: " + std::to_string(n_strata) + " strata in the data but " +
                               std::to_string(config.alpha_by_stratum.size()) +
                               " alphas configured");
    alpha = config.alpha_by_stratum;
    for (double a : alpha)
      if (!(a > 0.0 && a <= 1.0))
        throw std::runtime_error("analyze: alphas must lie in (0,1]");
    for (std::size_t i = 0; i < n; ++i)
      rhos[i] = case_flag(i) == 1 ? 1.0 : 1.0 / alpha[static_cast<std::size_t>(strata[i] - 1)];
  }

  out.sample.alpha = alpha;
  out.sample.event_definition = config.event_definition;
  out.sample.subjects.reserve(n);
  out.stratum_dummies.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    const std::size_t row_no = i + 2;
    Subject s;
    s.id = id_col >= 0 ? parse_int(row[static_cast<std::size_t>(id_col)], "id", row_no)
                       : static_cast<int>(i);
    s.covariates.reserve(cov_cols.size());
    for (int c : cov_cols)
      s.covariates.push_back(parse_double(row[static_cast<std::size_t>(c)],
                                          table.header[static_cast<std::size_t>(c)], row_no));
    s.exposure = exposures[i];
    s.obs_time = std::min(times[i], out.tau);
    s.event_conventional = events[i];
    s.event_generalized = gde[i];
    s.stratum = strata[i];
    s.subcohort_flag = xis[i];
    s.weight = rhos[i];
    (s.exposure == 1 ? out.sample.n_exposed : out.sample.n_unexposed) += 1;
    if (config.include_strata_in_propensity && n_strata > 1) {
      auto& dummies = out.stratum_dummies[i];
      dummies.assign(static_cast<std::size_t>(n_strata - 1), 0.0);
      if (strata[i] > 1) dummies[static_cast<std::size_t>(strata[i] - 2)] = 1.0;
    }
    out.sample.subjects.push_back(std::move(s));
  }
  return out;
}

AnalyzeResult analyze_dataset(const AnalyzeConfig& config) {
  LoadedDataset data = load_dataset(config);
  const CaseCohortSample& sample = data.sample;

  AnalyzeResult result;
  result.n_rows = static_cast<int>(sample.subjects.size());
  result.n_exposed = sample.n_exposed;
  result.n_unexposed = sample.n_unexposed;
  result.n_strata = data.n_strata;
  result.tau = data.tau;
  result.alpha = sample.alpha;
  result.alpha_single = pooled_alpha_from_sample(sample, data.n_strata);
  result.covariate_names = data.covariate_names;

  if (sample.n_exposed == 0 || sample.n_unexposed == 0)
    throw std::runtime_error("analyze: both exposure groups must be nonempty");

  // Pre-matching balance with the pooled SD of the case-cohort sample; the
  // same denominator is reused for every matched stage.
  std::vector<Subject> exposed, unexposed;
  for (const Subject& s : sample.subjects) (s.exposure == 1 ? exposed : unexposed).push_back(s);
  Eigen::MatrixXd x1 = covariate_matrix(exposed);
  Eigen::MatrixXd x0 = covariate_matrix(unexposed);
  Eigen::VectorXd sd = pooled_sd(x1, x0);
  for (auto& row : balance_report(x1, x0, sd, data.covariate_names, "pre_match"))
    result.balance.push_back(std::move(row));

  const bool multi_ratio = config.template_ratios.size() > 1;
  for (std::size_t ri = 0; ri < config.template_ratios.size(); ++ri) {
    double ratio = config.template_ratios[ri];
    std::vector<AttMethod> methods;
    for (AttMethod m : config.methods) {
      bool is_tmpl = m == AttMethod::ps_template || m == AttMethod::covar_template;
      if (ri == 0 || is_tmpl) methods.push_back(m);
    }
    if (methods.empty()) continue;

    SampleAnalysisOptions options;
    options.methods = methods;
    options.event_definition = config.event_definition;
    options.tau = data.tau;
    options.template_ratio = ratio;
    options.n_candidates = config.n_candidates;
    options.bootstrap_draws = config.bootstrap_draws;
    options.alpha_convention = config.alpha_convention;
    options.alpha_single = result.alpha_single;
    options.refit_phi = config.refit_phi;
    options.evaluate_phi_at_exposed = config.evaluate_phi_at_exposed;
    options.percentile_ci = config.percentile_ci;
    options.seed = derive_seed(config.seed, ri);
    for (const auto& d : data.stratum_dummies) options.extra_propensity_columns.push_back(d);

    SampleAnalysisOutput out = analyze_sample(sample, options);
    if (!out.propensity_error.empty())
      result.warnings.push_back("propensity: " + out.propensity_error);

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      bool is_tmpl = methods[mi] == AttMethod::ps_template ||
                     methods[mi] == AttMethod::covar_template;
      AnalyzeMethodRow row;
      row.method = methods[mi];
      row.template_ratio = is_tmpl ? ratio : std::numeric_limits<double>::quiet_NaN();
      row.ok = out.methods[mi].ok;
      row.error = out.methods[mi].error;
      if (row.ok) {
        // Locate the detailed result for this method.
        for (std::size_t d = 0; d < out.details.size(); ++d) {
          if (out.detail_index[d] != static_cast<int>(mi)) continue;
          const AttResult& det = out.details[d];
          row.estimate = det.estimate;
          row.template_id = det.template_id;
          row.phi_min = det.phi_min;
          row.phi_max = det.phi_max;
          row.bootstrap_missing = det.bootstrap_missing;
          for (const auto& w : det.warnings)
            result.warnings.push_back(to_string(methods[mi]) + ": " + w);

          std::string stage = to_string(methods[mi]);
          if (is_tmpl && multi_ratio)
            stage += "@r" + format_number(ratio);
          const MatchedPairSet& pairs = out.pair_sets[d];
          std::vector<Subject> pe, pu;
          for (const auto& p : pairs.pairs) {
            pe.push_back(p.exposed);
            pu.push_back(p.unexposed);
          }
          for (auto& b : balance_report(covariate_matrix(pe), covariate_matrix(pu), sd,
                                        data.covariate_names, stage))
            result.balance.push_back(std::move(b));
          result.curves.push_back({stage, "treated", det.hazard_treated});
          result.curves.push_back({stage, "control", det.hazard_control});
          break;
        }
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace ccrmst
