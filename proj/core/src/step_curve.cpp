#include "ccrmst/step_curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccrmst {

double StepCurve::at(double t) const {
  // Index of the last jump time <= t.
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return initial_value;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

bool StepCurve::is_valid_hazard() const {
  if (times.size() != values.size()) return false;
  if (initial_value < 0.0) return false;
  double prev_t = -1.0;
  double prev_v = initial_value;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > prev_t) || !std::isfinite(times[i])) return false;
    if (times[i] < 0.0) return false;
    if (!(values[i] >= prev_v) || !std::isfinite(values[i])) return false;
    prev_t = times[i];
    prev_v = values[i];
  }
  return true;
}

bool StepCurve::is_valid_survival() const {
  if (times.size() != values.size()) return false;
  if (initial_value != 1.0) return false;
  double prev_t = -1.0;
  double prev_v = 1.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > prev_t)) return false;
    if (times[i] < 0.0) return false;
    if (!(values[i] <= prev_v) || !(values[i] > 0.0)) return false;
    prev_t = times[i];
    prev_v = values[i];
  }
  return true;
}

StepCurve survival_from_hazard(const StepCurve& hazard) {
  if (!hazard.is_valid_hazard())
    throw std::invalid_argument("survival_from_hazard: not a valid cumulative hazard curve");
  StepCurve s;
  s.initial_value = std::exp(-hazard.initial_value);
  s.times = hazard.times;
  s.values.reserve(hazard.values.size());
  for (double h : hazard.values) s.values.push_back(std::exp(-h));
  return s;
}

double rmst_from_survival(const StepCurve& curve, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("rmst_from_survival: tau must be positive");
  if (!curve.is_valid_survival())
    throw std::invalid_argument("rmst_from_survival: not a valid survival curve");
  double area = 0.0;
  double seg_start = 0.0;
  double seg_value = curve.initial_value;
  for (std::size_t i = 0; i < curve.times.size() && curve.times[i] < tau; ++i) {
    area += seg_value * (curve.times[i] - seg_start);
    seg_start = curve.times[i];
    seg_value = curve.values[i];
  }
  area += seg_value * (tau - seg_start);
  return area;
}

}  // namespace ccrmst
