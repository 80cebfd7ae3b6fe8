#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "costcast/lossfit/spline.hpp"

namespace costcast::lossfit {

struct FitMetadata {
  double lambda = 0.0;
  double tolerance = 0.0;
  int k = 1;
  /// K from the curvature bound alone, before gap-driven refinement.
  int k_bound = 1;
  double l2_gap = 0.0;  // NaN when no spline was fitted
  std::string continuity = "least-squares segments, shared breakpoint value = mean of neighbours";
};

/// Continuous piecewise-linear loss with optional quadratic (Huber-type)
/// transitions of half-width delta around each breakpoint. Outside the
/// domain the end segments are extended linearly.
class PiecewiseLossFunction {
 public:
  PiecewiseLossFunction() = default;
  PiecewiseLossFunction(double lo, double hi, std::vector<double> slopes, std::vector<double> intercepts,
                        std::vector<double> breakpoints, std::vector<double> values, double delta = 0.0);

  int segment_count() const { return static_cast<int>(slopes_.size()); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& slopes() const { return slopes_; }
  const std::vector<double>& intercepts() const { return intercepts_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& breakpoint_values() const { return values_; }
  double huber_half_width() const { return delta_; }
  /// Smallest gap between consecutive points of {lo, breakpoints..., hi}.
  double min_spacing() const;

  /// (value, derivative) at eps.
  std::pair<double, double> evaluate(double eps) const;
  double value(double eps) const { return evaluate(eps).first; }
  double derivative(double eps) const { return evaluate(eps).second; }

  /// Plain piecewise-linear value (no transition smoothing).
  double linear_value(double eps) const;

  FitMetadata meta;

 private:
  void validate() const;

  double lo_ = 0.0, hi_ = 0.0;
  std::vector<double> slopes_, intercepts_, breakpoints_, values_;
  double delta_ = 0.0;
};

/// (integral over the domain of |s''|^(2/5))^(5/2).
double curvature_factor(const SmoothingSpline& s);
/// Error bound curvature_factor / (sqrt(120) K^2).
double l2_error_bound(const SmoothingSpline& s, int k);
/// Smallest K >= 1 whose error bound is within tolerance.
int breakpoint_count(const SmoothingSpline& s, double tolerance);
/// K - 1 breakpoints at the k/K quantiles of the normalised |s''|^(2/5) density.
std::vector<double> place_breakpoints(const SmoothingSpline& s, int k);
/// Least-squares line per subinterval, joined continuously at the breakpoints.
PiecewiseLossFunction linearize(const SmoothingSpline& s, const std::vector<double>& breakpoints);
/// Same pieces with quadratic transitions of half-width delta.
PiecewiseLossFunction huberize(const PiecewiseLossFunction& f, double delta);
/// L2 distance between the spline and the plain piecewise-linear function.
double l2_gap(const SmoothingSpline& s, const PiecewiseLossFunction& f);

nlohmann::json to_json(const PiecewiseLossFunction& f);
PiecewiseLossFunction piecewise_from_json(const nlohmann::json& j);

}  // namespace costcast::lossfit
