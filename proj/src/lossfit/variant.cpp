#include "costcast/lossfit/variant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"

namespace costcast::lossfit {

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::hourly: return "hourly";
    case LossKind::daily: return "daily";
    case LossKind::linear: return "linear";
    case LossKind::mse: return "mse";
  }
  return "mse";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "hourly") return LossKind::hourly;
  if (s == "daily") return LossKind::daily;
  if (s == "linear") return LossKind::linear;
  if (s == "mse") return LossKind::mse;
  throw UsageError("unknown loss kind '" + s + "' (expected hourly, daily, linear or mse)");
}

namespace {

double tolerance_for(const std::vector<SplineSample>& samples, const FitOptions& opts) {
  if (opts.tolerance > 0.0) return opts.tolerance;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.y);
    hi = std::max(hi, s.y);
  }
  const double range = hi - lo;
  if (!(range > 0.0)) return opts.tolerance_fraction;  // flat data: any K = 1 fit is exact
  return opts.tolerance_fraction * range;
}

}  // namespace

PiecewiseLossFunction fit_piecewise(const std::vector<SplineSample>& samples, const FitOptions& opts) {
  const SmoothingSpline s = opts.lambda < 0.0 ? fit_spline_gcv(samples) : fit_spline(samples, opts.lambda);
  const double tol = tolerance_for(samples, opts);
  const int k_bound = breakpoint_count(s, tol);
  const auto build = [&](int k) {
    const auto bps = k >= 2 ? place_breakpoints(s, k) : std::vector<double>{};
    PiecewiseLossFunction lin = linearize(s, bps);
    lin.meta.lambda = s.lambda();
    lin.meta.tolerance = tol;
    lin.meta.k = k;
    lin.meta.k_bound = k_bound;
    lin.meta.l2_gap = l2_gap(s, lin);
    return lin;
  };
  PiecewiseLossFunction lin = build(k_bound);
  if (opts.refine_segments) {
    for (int k = k_bound + 1; lin.meta.l2_gap > tol && k <= opts.max_segments; ++k) lin = build(k);
  }
  return huberize(lin, opts.delta_fraction * lin.min_spacing());
}

PiecewiseLossFunction fit_linear(const std::vector<SplineSample>& samples, const FitOptions& opts) {
  double sxx_n = 0.0, sxy_n = 0.0, sxx_p = 0.0, sxy_p = 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.x);
    hi = std::max(hi, s.x);
    if (s.x < 0.0) {
      sxx_n += s.x * s.x;
      sxy_n += s.x * s.y;
    } else if (s.x > 0.0) {
      sxx_p += s.x * s.x;
      sxy_p += s.x * s.y;
    }
  }
  if (!(lo < 0.0 && hi > 0.0) || sxx_n <= 0.0 || sxx_p <= 0.0)
    throw ValidationError("linear loss: samples must lie on both sides of zero");
  const double a_neg = sxy_n / sxx_n, a_pos = sxy_p / sxx_p;
  PiecewiseLossFunction f(lo, hi, {a_neg, a_pos}, {0.0, 0.0}, {0.0}, {0.0});
  f.meta.k = 2;
  f.meta.lambda = 0.0;
  f.meta.tolerance = 0.0;
  f.meta.l2_gap = std::numeric_limits<double>::quiet_NaN();
  f.meta.continuity = "least-squares half-lines through the origin";
  return huberize(f, opts.delta_fraction * f.min_spacing());
}

LossVariant::LossVariant(LossKind kind, std::vector<PiecewiseLossFunction> functions)
    : kind_(kind), functions_(std::move(functions)) {
  if (kind_ == LossKind::mse && !functions_.empty()) throw ValidationError("mse loss carries no fitted functions");
  if ((kind_ == LossKind::daily || kind_ == LossKind::linear) && functions_.size() != 1)
    throw ValidationError(to_string(kind_) + " loss needs exactly one function");
  if (kind_ == LossKind::hourly && functions_.empty()) throw ValidationError("hourly loss needs one function per hour");
}

std::pair<double, double> LossVariant::evaluate(std::size_t hour, double eps) const {
  switch (kind_) {
    case LossKind::mse: return {eps * eps, 2.0 * eps};
    case LossKind::hourly:
      if (hour >= functions_.size())
        throw ValidationError("hourly loss: hour " + std::to_string(hour + 1) + " has no fitted function");
      return functions_[hour].evaluate(eps);
    default: return functions_.front().evaluate(eps);
  }
}

LossVariant fit_variant(const std::vector<scenario::LossSample>& samples, LossKind kind, const FitOptions& opts) {
  if (kind == LossKind::mse) return LossVariant(kind, {});
  std::map<int, std::vector<SplineSample>> by_hour;
  std::vector<SplineSample> pooled;
  for (const auto& s : samples) {
    if (s.shed_flag && !opts.include_shed) continue;
    by_hour[s.hour].push_back({s.fep, s.fepc});
    pooled.push_back({s.fep, s.fepc});
  }
  if (pooled.empty()) throw ValidationError("fit_variant: no loss samples to fit");
  if (kind == LossKind::daily) return LossVariant(kind, {fit_piecewise(pooled, opts)});
  if (kind == LossKind::linear) return LossVariant(kind, {fit_linear(pooled, opts)});
  const int hours = by_hour.rbegin()->first + 1;
  std::vector<PiecewiseLossFunction> fns;
  for (int h = 0; h < hours; ++h) {
    const auto it = by_hour.find(h);
    if (it == by_hour.end()) throw ValidationError("fit_variant: hour " + std::to_string(h + 1) + " has no samples");
    fns.push_back(fit_piecewise(it->second, opts));
  }
  return LossVariant(kind, std::move(fns));
}

nlohmann::json to_json(const LossVariant& v) {
  nlohmann::json j;
  j["kind"] = to_string(v.kind());
  j["functions"] = nlohmann::json::array();
  for (std::size_t h = 0; h < v.functions().size(); ++h) {
    nlohmann::json f = to_json(v.functions()[h]);
    f["kind"] = to_string(v.kind());
    if (v.kind() == LossKind::hourly) f["hour"] = h + 1;
    j["functions"].push_back(std::move(f));
  }
  return j;
}

LossVariant variant_from_json(const nlohmann::json& j) {
  try {
    const LossKind kind = loss_kind_from_string(j.at("kind").get<std::string>());
    std::vector<PiecewiseLossFunction> fns;
    for (const auto& f : j.at("functions")) fns.push_back(piecewise_from_json(f));
    return LossVariant(kind, std::move(fns));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("loss variant: ") + e.what());
  } catch (const UsageError& e) {
    throw ParseError(std::string("loss variant: ") + e.what());
  }
}

void save_variant(const std::string& path, const LossVariant& v) { csv::write_text(path, to_json(v).dump(1) + "\n"); }

LossVariant load_variant(const std::string& path) {
  const std::string text = csv::read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return variant_from_json(j);
}

}  // namespace costcast::lossfit
