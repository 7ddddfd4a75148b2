#include "ccrmst/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ccrmst/rng.hpp"

namespace ccrmst {

std::string to_string(AttMethod m) {
  switch (m) {
    case AttMethod::ps_plain: return "ps_plain";
    case AttMethod::ps_template: return "ps_template";
    case AttMethod::covar_plain: return "covar_plain";
    case AttMethod::covar_template: return "covar_template";
  }
  return "unknown";
}

AttMethod att_method_from_string(const std::string& name) {
  if (name == "ps_plain") return AttMethod::ps_plain;
  if (name == "ps_template") return AttMethod::ps_template;
  if (name == "covar_plain") return AttMethod::covar_plain;
  if (name == "covar_template") return AttMethod::covar_template;
  throw std::invalid_argument("unknown method: " + name);
}

namespace {

struct RiskEntry {
  double time = 0.0;
  bool event = false;
  double jump_weight = 0.0;  // numerator contribution if event
  double risk_weight = 0.0;  // at-risk (denominator) contribution
};

// Aggregated Nelson-Aalen-type sweep: jumps at event times u <= tau of
// (sum of jump weights at u) / (sum of risk weights over obs_time >= u).
// Ties at identical times aggregate into a single jump.
StepCurve weighted_hazard(std::vector<RiskEntry> entries, double tau) {
  std::sort(entries.begin(), entries.end(),
            [](const RiskEntry& a, const RiskEntry& b) { return a.time < b.time; });
  const std::size_t n = entries.size();
  std::vector<double> risk_suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;)
    risk_suffix[i] = risk_suffix[i + 1] + entries[i].risk_weight;

  StepCurve h;
  h.initial_value = 0.0;
  double cumulative = 0.0;
  std::size_t i = 0;
  while (i < n) {
    double u = entries[i].time;
    std::size_t j = i;
    double jump = 0.0;
    while (j < n && entries[j].time == u) {
      if (entries[j].event) jump += entries[j].jump_weight;
      ++j;
    }
    if (u <= tau && jump > 0.0) {
      double at_risk_total = risk_suffix[i];
      if (!(at_risk_total > 0.0))
        throw std::runtime_error("hazard estimator: zero weighted risk set at event time " +
                                 std::to_string(u));
      cumulative += jump / at_risk_total;
      h.times.push_back(u);
      h.values.push_back(cumulative);
    }
    i = j;
  }
  return h;
}

double phi_for_pair(const PhiModel& phi, const MatchedPair& pair, bool evaluate_at_exposed) {
  const Subject& eval = evaluate_at_exposed ? pair.exposed : pair.unexposed;
  double phat = evaluate_at_exposed ? pair.exposed_propensity : pair.unexposed_propensity;
  double e = phi.event_prob(eval, phat);
  // alpha is always the unexposed member's: phi estimates that subject's
  // expected sampling weight.
  double alpha = phi.alpha_for(pair.unexposed);
  double value = e + (1.0 - e) / alpha;
  if (!(value > 0.0)) throw std::runtime_error("phi must be positive");
  return value;
}

int count_events(const MatchedPairSet& pairs, bool exposed_arm, EventDefinition def) {
  int n = 0;
  for (const auto& p : pairs.pairs)
    n += (exposed_arm ? p.exposed : p.unexposed).event(def);
  return n;
}

void check_truncation(const MatchedPairSet& pairs, double tau) {
  double max_treated = 0.0, max_control = 0.0;
  for (const auto& p : pairs.pairs) {
    max_treated = std::max(max_treated, p.exposed.obs_time);
    max_control = std::max(max_control, p.unexposed.obs_time);
  }
  if (max_treated < tau)
    throw std::runtime_error("truncation time exceeds the largest follow-up in the treated arm");
  if (max_control < tau)
    throw std::runtime_error("truncation time exceeds the largest follow-up in the control arm");
}

}  // namespace

StepCurve hazard_treated(const MatchedPairSet& pairs, double tau, EventDefinition def) {
  if (pairs.pairs.empty()) throw std::invalid_argument("hazard_treated: no pairs");
  std::vector<RiskEntry> entries;
  entries.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    RiskEntry e;
    e.time = p.exposed.obs_time;
    e.event = p.exposed.event(def) == 1;
    e.jump_weight = 1.0;  // unweighted event count; events always carry rho = 1
    e.risk_weight = p.exposed.weight;
    entries.push_back(e);
  }
  return weighted_hazard(std::move(entries), tau);
}

StepCurve hazard_control(const MatchedPairSet& pairs, const PhiModel& phi, double tau,
                         EventDefinition def, bool evaluate_at_exposed) {
  if (pairs.pairs.empty()) throw std::invalid_argument("hazard_control: no pairs");
  std::vector<RiskEntry> entries;
  entries.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    double phi_inv = 1.0 / phi_for_pair(phi, p, evaluate_at_exposed);
    RiskEntry e;
    e.time = p.unexposed.obs_time;
    e.event = p.unexposed.event(def) == 1;
    e.jump_weight = p.exposed.weight * phi_inv;
    e.risk_weight = p.exposed.weight * p.unexposed.weight * phi_inv;
    entries.push_back(e);
  }
  return weighted_hazard(std::move(entries), tau);
}

AttEstimate estimate_att_point(const MatchedPairSet& pairs, const PhiModel& phi, double tau,
                               EventDefinition def, bool evaluate_at_exposed) {
  if (pairs.pairs.empty()) throw std::invalid_argument("estimate_att_point: no pairs");
  if (tau <= 0.0) throw std::invalid_argument("estimate_att_point: tau must be positive");
  check_truncation(pairs, tau);
  StepCurve h1 = hazard_treated(pairs, tau, def);
  StepCurve h0 = hazard_control(pairs, phi, tau, def, evaluate_at_exposed);
  AttEstimate est;
  est.rmst_treated = rmst_from_survival(survival_from_hazard(h1), tau);
  est.rmst_control = rmst_from_survival(survival_from_hazard(h0), tau);
  est.att = est.rmst_treated - est.rmst_control;
  est.n_pairs = static_cast<int>(pairs.pairs.size());
  return est;
}

BootstrapResult bootstrap_variance(const MatchedPairSet& pairs, const PhiConfig& phi_config,
                                   const PhiModel& phi_original, double att_point, double tau,
                                   EventDefinition def, int n_draws, std::uint64_t seed,
                                   bool refit_phi, bool evaluate_at_exposed,
                                   bool percentile_ci) {
  if (n_draws < 2) throw std::invalid_argument("bootstrap_variance: need at least 2 draws");
  if (pairs.pairs.empty()) throw std::invalid_argument("bootstrap_variance: no pairs");
  const auto m = pairs.pairs.size();

  BootstrapResult out;
  out.draws.reserve(static_cast<std::size_t>(n_draws));
  MatchedPairSet resample;
  resample.distance = pairs.distance;
  for (int b = 0; b < n_draws; ++b) {
    std::mt19937_64 rng = make_rng(derive_seed(seed, stream::bootstrap), static_cast<std::uint64_t>(b));
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    resample.pairs.clear();
    resample.pairs.reserve(m);
    for (std::size_t i = 0; i < m; ++i) resample.pairs.push_back(pairs.pairs[pick(rng)]);

    if (count_events(resample, true, def) == 0 || count_events(resample, false, def) == 0) {
      ++out.n_missing;
      continue;
    }
    try {
      const PhiModel* phi = &phi_original;
      PhiModel refit;
      if (refit_phi) {
        refit = fit_phi(resample.unexposed_subjects(), resample.unexposed_propensities(),
                        phi_config);
        phi = &refit;
      }
      out.draws.push_back(
          estimate_att_point(resample, *phi, tau, def, evaluate_at_exposed).att);
    } catch (const std::exception&) {
      ++out.n_missing;
    }
  }

  const auto used = out.draws.size();
  if (used < 2)
    throw std::runtime_error("bootstrap_variance: fewer than two usable bootstrap draws");
  if (out.n_missing > 0 &&
      static_cast<double>(out.n_missing) > 0.05 * static_cast<double>(n_draws))
    out.warnings.push_back("bootstrap: " + std::to_string(out.n_missing) + " of " +
                           std::to_string(n_draws) + " draws were degenerate and excluded");

  double mean = 0.0;
  for (double d : out.draws) mean += d;
  mean /= static_cast<double>(used);
  double ss = 0.0;
  for (double d : out.draws) ss += (d - mean) * (d - mean);
  out.se = std::sqrt(ss / static_cast<double>(used - 1));

  if (percentile_ci) {
    std::vector<double> sorted = out.draws;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
      double pos = q * static_cast<double>(sorted.size() - 1);
      auto lo = static_cast<std::size_t>(pos);
      double frac = pos - static_cast<double>(lo);
      if (lo + 1 >= sorted.size()) return sorted.back();
      return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
    };
    out.ci_low = quantile(0.025);
    out.ci_high = quantile(0.975);
  } else {
    out.ci_low = att_point - 1.96 * out.se;
    out.ci_high = att_point + 1.96 * out.se;
  }
  return out;
}

AttResult estimate_att(const MatchedPairSet& pairs, const PhiConfig& phi_config, double tau,
                       EventDefinition def, int bootstrap_draws, std::uint64_t seed,
                       AttMethod method, bool refit_phi, bool evaluate_at_exposed,
                       bool percentile_ci) {
  AttResult result;
  result.method = method;
  result.template_id = pairs.template_id;

  PhiModel phi = fit_phi(pairs.unexposed_subjects(), pairs.unexposed_propensities(), phi_config);
  for (const auto& w : phi.warnings) result.warnings.push_back(w);

  result.estimate = estimate_att_point(pairs, phi, tau, def, evaluate_at_exposed);
  result.hazard_treated = hazard_treated(pairs, tau, def);
  result.hazard_control = hazard_control(pairs, phi, tau, def, evaluate_at_exposed);

  result.phi_min = std::numeric_limits<double>::infinity();
  result.phi_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : pairs.pairs) {
    double v = phi_for_pair(phi, p, evaluate_at_exposed);
    result.phi_min = std::min(result.phi_min, v);
    result.phi_max = std::max(result.phi_max, v);
  }

  BootstrapResult boot =
      bootstrap_variance(pairs, phi_config, phi, result.estimate.att, tau, def, bootstrap_draws,
                         seed, refit_phi, evaluate_at_exposed, percentile_ci);
  result.estimate.se = boot.se;
  result.estimate.ci_low = boot.ci_low;
  result.estimate.ci_high = boot.ci_high;
  result.bootstrap_draws = std::move(boot.draws);
  result.bootstrap_missing = boot.n_missing;
  for (const auto& w : boot.warnings) result.warnings.push_back(w);
  return result;
}

}  // namespace ccrmst
