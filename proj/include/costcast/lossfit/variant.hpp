#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "costcast/lossfit/piecewise.hpp"
#include "costcast/scenario/scenario.hpp"

namespace costcast::lossfit {

enum class LossKind { hourly, daily, linear, mse };

std::string to_string(LossKind k);
/// Throws UsageError for unknown names.
LossKind loss_kind_from_string(const std::string& s);

struct FitOptions {
  /// Approximation tolerance as a fraction of the sample cost range.
  double tolerance_fraction = 0.02;
  /// Absolute tolerance; overrides tolerance_fraction when positive.
  double tolerance = 0.0;
  /// Huber half-width as a fraction of the minimum breakpoint spacing.
  double delta_fraction = 0.25;
  /// Smoothing parameter; negative selects it by GCV.
  double lambda = -1.0;
  /// Include samples whose dispatch needed load shedding.
  bool include_shed = false;
  /// Raise K above the curvature bound until the realised L2 gap meets the
  /// tolerance (kinked data concentrates curvature and defeats the bound).
  bool refine_segments = true;
  int max_segments = 64;
};

/// Spline -> K -> breakpoints -> linearize -> huberize on one group of samples.
PiecewiseLossFunction fit_piecewise(const std::vector<SplineSample>& samples, const FitOptions& opts);

/// Two half-lines through the origin, joined by a transition at zero.
PiecewiseLossFunction fit_linear(const std::vector<SplineSample>& samples, const FitOptions& opts);

class LossVariant {
 public:
  LossVariant() = default;
  LossVariant(LossKind kind, std::vector<PiecewiseLossFunction> functions);

  LossKind kind() const { return kind_; }
  const std::vector<PiecewiseLossFunction>& functions() const { return functions_; }

  /// (value, d value / d eps) for hour `hour` (0-based; ignored unless hourly).
  std::pair<double, double> evaluate(std::size_t hour, double eps) const;

 private:
  LossKind kind_ = LossKind::mse;
  std::vector<PiecewiseLossFunction> functions_;
};

LossVariant fit_variant(const std::vector<scenario::LossSample>& samples, LossKind kind, const FitOptions& opts = {});

nlohmann::json to_json(const LossVariant& v);
LossVariant variant_from_json(const nlohmann::json& j);
void save_variant(const std::string& path, const LossVariant& v);
LossVariant load_variant(const std::string& path);

}  // namespace costcast::lossfit
