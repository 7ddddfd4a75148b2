#pragma once

#include <vector>

namespace ccrmst {

// Right-continuous step function on [0, inf). Only jump points are stored;
// the value on [0, times[0]) is initial_value and on [times[i], times[i+1])
// is values[i]. Evaluation is O(log #jumps).
struct StepCurve {
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;  // one per jump time
  double initial_value = 0.0;

  double at(double t) const;

  bool empty() const { return times.empty(); }

  // Jump times strictly increasing, values nondecreasing from a nonnegative
  // initial value.
  bool is_valid_hazard() const;
  // Starts at 1, nonincreasing, values in (0, 1].
  bool is_valid_survival() const;
};

// Pointwise S(t) = exp(-H(t)); jump times preserved.
StepCurve survival_from_hazard(const StepCurve& hazard);

// Exact area under a survival step curve on [0, tau]. Throws on a
// non-monotone curve or nonpositive tau. Jumps beyond tau are ignored.
double rmst_from_survival(const StepCurve& curve, double tau);

}  // namespace ccrmst
