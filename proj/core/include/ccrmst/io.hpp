#pragma once

#include <string>
#include <vector>

#include "ccrmst/case_cohort.hpp"
#include "ccrmst/experiment.hpp"
#include "ccrmst/matching.hpp"
#include "ccrmst/step_curve.hpp"

namespace ccrmst {

// Comma-separated, header row, UTF-8, '.' decimal. Reading handles quoted
// fields; writing never quotes (no field we emit contains a comma).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;          // -1 when absent
  int require_column(const std::string& name) const;  // throws when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Fixed formatting so identical runs produce byte-identical files.
std::string format_number(double v);        // compact, for result tables
std::string format_number_exact(double v);  // round-trip exact, for data exports

double parse_double(const std::string& s, const std::string& what, std::size_t row);
int parse_int(const std::string& s, const std::string& what, std::size_t row);

// Full-cohort export: id,x1..x6,a,time,delta,delta_star,stratum[,xi,rho].
void write_cohort_csv(const std::string& path, const std::vector<Subject>& cohort,
                      const std::vector<int>* xi = nullptr,
                      const std::vector<double>* rho = nullptr);

// Case-cohort export: cohort columns plus xi,rho,alpha_stratum.
void write_case_cohort_csv(const std::string& path, const CaseCohortSample& sample);

void write_metrics_csv(const std::string& path, const ExperimentConfig& config,
                       const ExperimentResult& result);
void write_replications_csv(const std::string& path, const ExperimentConfig& config,
                            const ExperimentResult& result);
void write_balance_csv(const std::string& path, const std::vector<BalanceRow>& rows);

struct LabeledCurve {
  std::string label;  // method or analysis name
  std::string arm;    // "treated" or "control"
  StepCurve hazard;
};
// Dumps survival step curves (exp of minus the hazard) for plotting:
// label,arm,time,survival with a leading time-0 row.
void write_survival_curves_csv(const std::string& path, const std::vector<LabeledCurve>& curves);

void ensure_directory(const std::string& path);

}  // namespace ccrmst
