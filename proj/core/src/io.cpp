#include "ccrmst/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccrmst {

int CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  int j = column(name);
  if (j < 0) throw std::runtime_error("missing required column: " + name);
  return j;
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(field));
  return fields;
}
}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == EOF) break;
    auto fields = split_csv_line(line, line_no);
    if (line_no == 1) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size())
        throw std::runtime_error(path + " line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw std::runtime_error(path + ": empty file");
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j)
    out << header[j] << (j + 1 < header.size() ? ',' : '\n');
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("write_csv: row width mismatch for " + path);
    for (std::size_t j = 0; j < row.size(); ++j)
      out << row[j] << (j + 1 < row.size() ? ',' : '\n');
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string format_number_exact(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what, std::size_t row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("row " + std::to_string(row) + ": cannot parse " + what + " value '" +
                             s + "'");
  }
}

int parse_int(const std::string& s, const std::string& what, std::size_t row) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("row " + std::to_string(row) + ": cannot parse " + what + " value '" +
                             s + "'");
  }
}

namespace {
std::vector<std::string> subject_row(const Subject& s, int xi, double rho, bool with_sampling,
                                     double alpha_stratum = 0.0, bool with_alpha = false) {
  std::vector<std::string> row;
  row.push_back(std::to_string(s.id));
  for (double x : s.covariates) row.push_back(format_number_exact(x));
  row.push_back(std::to_string(s.exposure));
  row.push_back(format_number_exact(s.obs_time));
  row.push_back(std::to_string(s.event_conventional));
  row.push_back(std::to_string(s.event_generalized));
  row.push_back(std::to_string(s.stratum));
  if (with_sampling) {
    row.push_back(std::to_string(xi));
    row.push_back(format_number_exact(rho));
  }
  if (with_alpha) row.push_back(format_number_exact(alpha_stratum));
  return row;
}

std::vector<std::string> subject_header(std::size_t p, bool with_sampling, bool with_alpha) {
  std::vector<std::string> h{"id"};
  for (std::size_t j = 1; j <= p; ++j) h.push_back("x" + std::to_string(j));
  h.insert(h.end(), {"a", "time", "delta", "delta_star", "stratum"});
  if (with_sampling) h.insert(h.end(), {"xi", "rho"});
  if (with_alpha) h.push_back("alpha_stratum");
  return h;
}
}  // namespace

void write_cohort_csv(const std::string& path, const std::vector<Subject>& cohort,
                      const std::vector<int>* xi, const std::vector<double>* rho) {
  if (cohort.empty()) throw std::invalid_argument("write_cohort_csv: empty cohort");
  bool with_sampling = xi != nullptr && rho != nullptr;
  std::vector<std::vector<std::string>> rows;
  rows.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i)
    rows.push_back(subject_row(cohort[i], with_sampling ? (*xi)[i] : 0,
                               with_sampling ? (*rho)[i] : 0.0, with_sampling));
  write_csv(path, subject_header(cohort.front().covariates.size(), with_sampling, false), rows);
}

void write_case_cohort_csv(const std::string& path, const CaseCohortSample& sample) {
  if (sample.subjects.empty()) throw std::invalid_argument("write_case_cohort_csv: empty sample");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(sample.subjects.size());
  for (const Subject& s : sample.subjects)
    rows.push_back(subject_row(s, s.subcohort_flag, s.weight, true,
                               sample.alpha[static_cast<std::size_t>(s.stratum - 1)], true));
  write_csv(path, subject_header(sample.subjects.front().covariates.size(), true, true), rows);
}

void write_metrics_csv(const std::string& path, const ExperimentConfig& config,
                       const ExperimentResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : result.metrics) {
    rows.push_back({config.scenario.name, std::to_string(config.scenario.n_full),
                    "1:" + std::to_string(config.scenario.controls_per_exposed),
                    to_string(m.method), to_string(m.event_definition),
                    format_number(m.true_att), std::to_string(config.replications),
                    std::to_string(m.n_used), std::to_string(m.n_failed),
                    format_number(m.mean_att), format_number(m.pct_bias), format_number(m.sem),
                    format_number(m.see),
                    format_number(std::isnan(m.coverage) ? m.coverage : 100.0 * m.coverage)});
  }
  write_csv(path,
            {"scenario", "n_full", "ratio", "method", "event_def", "true_att", "n_reps", "n_used",
             "n_failed", "mean_att", "pct_bias", "sem", "see", "cp"},
            rows);
}

void write_replications_csv(const std::string& path, const ExperimentConfig& config,
                            const ExperimentResult& result) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& rep : result.replications) {
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const auto& m = rep.methods[mi];
      bool ok = rep.ok && m.ok;
      rows.push_back({std::to_string(rep.replication), to_string(config.methods[mi]),
                      ok ? "1" : "0", ok ? format_number(m.att) : "NA",
                      ok ? format_number(m.se) : "NA", ok ? format_number(m.ci_low) : "NA",
                      ok ? format_number(m.ci_high) : "NA",
                      ok ? std::to_string(m.n_pairs) : "NA",
                      ok ? std::to_string(m.bootstrap_missing) : "NA",
                      ok ? format_number(m.phi_min) : "NA", ok ? format_number(m.phi_max) : "NA",
                      ok ? "" : (rep.ok ? m.error : rep.error)});
    }
  }
  write_csv(path,
            {"replication", "method", "ok", "att", "se", "ci_low", "ci_high", "n_pairs",
             "bootstrap_missing", "phi_min", "phi_max", "error"},
            rows);
}

void write_balance_csv(const std::string& path, const std::vector<BalanceRow>& rows) {
  std::vector<std::vector<std::string>> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back({r.covariate, r.stage, r.metric,
                   r.undefined ? "undefined" : format_number(r.value)});
  write_csv(path, {"covariate", "stage", "metric", "value"}, out);
}

void write_survival_curves_csv(const std::string& path,
                               const std::vector<LabeledCurve>& curves) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : curves) {
    StepCurve survival = survival_from_hazard(c.hazard);
    rows.push_back({c.label, c.arm, "0", format_number(survival.initial_value)});
    for (std::size_t i = 0; i < survival.times.size(); ++i)
      rows.push_back({c.label, c.arm, format_number(survival.times[i]),
                      format_number(survival.values[i])});
  }
  write_csv(path, {"label", "arm", "time", "survival"}, rows);
}

void ensure_directory(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + path + ": " + ec.message());
}

}  // namespace ccrmst
