#include "costcast/lossfit/piecewise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "costcast/common/errors.hpp"

namespace costcast::lossfit {

namespace {

constexpr double kCurvaturePower = 0.4;

// Five-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 9.
constexpr std::array<double, 5> kGaussX{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                        0.9061798459386640};
constexpr std::array<double, 5> kGaussW{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                        0.4786286704993665, 0.2369268850561891};

// Integrates fn over [a, b] split at the spline knots and at `cuts`, so the
// integrand is polynomial on every piece.
template <class Fn>
double integrate_pieces(const SmoothingSpline& s, double a, double b, const std::vector<double>& cuts, Fn&& fn) {
  std::vector<double> pts;
  pts.push_back(a);
  for (double x : s.knots())
    if (x > a && x < b) pts.push_back(x);
  for (double x : cuts)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double l = pts[i], r = pts[i + 1];
    if (r <= l) continue;
    const double mid = 0.5 * (l + r), half = 0.5 * (r - l);
    for (std::size_t g = 0; g < kGaussX.size(); ++g) total += kGaussW[g] * half * fn(mid + half * kGaussX[g]);
  }
  return total;
}

}  // namespace

PiecewiseLossFunction::PiecewiseLossFunction(double lo, double hi, std::vector<double> slopes,
                                             std::vector<double> intercepts, std::vector<double> breakpoints,
                                             std::vector<double> values, double delta)
    : lo_(lo),
      hi_(hi),
      slopes_(std::move(slopes)),
      intercepts_(std::move(intercepts)),
      breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      delta_(delta) {
  validate();
}

double PiecewiseLossFunction::min_spacing() const {
  double prev = lo_, gap = std::numeric_limits<double>::infinity();
  for (double b : breakpoints_) {
    gap = std::min(gap, b - prev);
    prev = b;
  }
  return std::min(gap, hi_ - prev);
}

void PiecewiseLossFunction::validate() const {
  if (!(hi_ > lo_)) throw ValidationError("loss function: domain must satisfy lo < hi");
  if (slopes_.empty() || intercepts_.size() != slopes_.size())
    throw ValidationError("loss function: slopes and intercepts must be non-empty and of equal length");
  if (breakpoints_.size() + 1 != slopes_.size() || values_.size() != breakpoints_.size())
    throw ValidationError("loss function: K segments need K-1 breakpoints and values");
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    const double e = breakpoints_[k];
    if (!(e > (k ? breakpoints_[k - 1] : lo_)) || !(e < hi_))
      throw ValidationError("loss function: breakpoints must be strictly increasing inside the domain");
    const double left = slopes_[k] * e + intercepts_[k], right = slopes_[k + 1] * e + intercepts_[k + 1];
    const double scale = 1.0 + std::abs(values_[k]);
    if (std::abs(left - values_[k]) > 1e-9 * scale || std::abs(right - values_[k]) > 1e-9 * scale)
      throw ValidationError("loss function: segments do not meet at breakpoint " + std::to_string(k + 1));
  }
  if (!(delta_ >= 0.0)) throw ValidationError("loss function: huber_half_width must be >= 0");
  if (!breakpoints_.empty() && !(delta_ < 0.5 * min_spacing()))
    throw ValidationError("loss function: huber_half_width must be below half the minimum breakpoint spacing");
}

double PiecewiseLossFunction::linear_value(double eps) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), eps) -
                                          breakpoints_.begin());
  return slopes_[k] * eps + intercepts_[k];
}

std::pair<double, double> PiecewiseLossFunction::evaluate(double eps) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), eps) -
                                          breakpoints_.begin());
  if (delta_ > 0.0) {
    // Nearest breakpoint is either k-1 (left of eps) or k (right of eps).
    for (std::size_t c : {k - 1, k}) {
      if (c >= breakpoints_.size()) continue;
      const double t = eps - breakpoints_[c];
      if (std::abs(t) < delta_) {
        const double a0 = slopes_[c], a1 = slopes_[c + 1];
        const double v = (a1 - a0) / (4.0 * delta_) * t * t + 0.5 * (a1 + a0) * t + 0.25 * (a1 - a0) * delta_ + values_[c];
        const double d = (a1 - a0) / (2.0 * delta_) * t + 0.5 * (a1 + a0);
        return {v, d};
      }
    }
  }
  // Line k written about its nearest breakpoint to keep rounding small.
  if (k < breakpoints_.size()) return {slopes_[k] * (eps - breakpoints_[k]) + values_[k], slopes_[k]};
  if (k > 0) return {slopes_[k] * (eps - breakpoints_[k - 1]) + values_[k - 1], slopes_[k]};
  return {slopes_[0] * eps + intercepts_[0], slopes_[0]};
}

double curvature_factor(const SmoothingSpline& s) {
  return std::pow(s.curvature_integral(s.lo(), s.hi(), kCurvaturePower), 2.5);
}

double l2_error_bound(const SmoothingSpline& s, int k) {
  return curvature_factor(s) / (std::sqrt(120.0) * static_cast<double>(k) * static_cast<double>(k));
}

int breakpoint_count(const SmoothingSpline& s, double tolerance) {
  if (!(tolerance > 0.0)) throw ValidationError("breakpoint_count: tolerance must be positive");
  const double factor = curvature_factor(s);
  if (!std::isfinite(factor)) throw ValidationError("breakpoint_count: curvature integral is not finite");
  if (factor <= 0.0) return 1;
  const double k = std::ceil(std::sqrt(factor / (std::sqrt(120.0) * tolerance)));
  int out = std::max(1, static_cast<int>(k));
  // Guard against rounding in sqrt/ceil.
  while (out > 1 && l2_error_bound(s, out - 1) <= tolerance) --out;
  while (l2_error_bound(s, out) > tolerance) ++out;
  return out;
}

std::vector<double> place_breakpoints(const SmoothingSpline& s, int k) {
  if (k < 2) throw ValidationError("place_breakpoints: K must be at least 2");
  const double total = s.curvature_integral(s.lo(), s.hi(), kCurvaturePower);
  std::vector<double> out;
  if (total <= 0.0) {
    for (int j = 1; j < k; ++j) out.push_back(s.lo() + (s.hi() - s.lo()) * j / k);
    return out;
  }
  // Cumulative integral at each knot, then bisection inside the crossing piece.
  const auto& x = s.knots();
  std::vector<double> cum(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) cum[i] = cum[i - 1] + s.curvature_integral(x[i - 1], x[i], kCurvaturePower);
  for (int j = 1; j < k; ++j) {
    const double target = total * j / k;
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cum.begin()));
    i = std::min(i, x.size() - 1);
    double a = x[i - 1], b = x[i];
    const double base = cum[i - 1];
    for (int it2 = 0; it2 < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it2) {
      const double m = 0.5 * (a + b);
      if (base + s.curvature_integral(x[i - 1], m, kCurvaturePower) < target)
        a = m;
      else
        b = m;
    }
    out.push_back(0.5 * (a + b));
  }
  for (std::size_t j = 1; j < out.size(); ++j)
    if (!(out[j] > out[j - 1])) throw ValidationError("place_breakpoints: curvature density too concentrated for K");
  return out;
}

PiecewiseLossFunction linearize(const SmoothingSpline& s, const std::vector<double>& breakpoints) {
  std::vector<double> edges{s.lo()};
  for (double b : breakpoints) {
    if (!(b > edges.back()) || !(b < s.hi())) throw ValidationError("linearize: empty subinterval at breakpoint " + std::to_string(b));
    edges.push_back(b);
  }
  edges.push_back(s.hi());
  const std::size_t k = edges.size() - 1;
  std::vector<double> ls_slope(k), ls_int(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double l = edges[j], r = edges[j + 1], c = 0.5 * (l + r), len = r - l;
    // Continuous least squares in the centred variable t = x - c: slope = <t, s> / <t, t>, mean = <1, s> / len.
    const double mean = integrate_pieces(s, l, r, {}, [&](double x) { return s.value(x); }) / len;
    const double tt = len * len * len / 12.0;
    const double ts = integrate_pieces(s, l, r, {}, [&](double x) { return (x - c) * s.value(x); });
    ls_slope[j] = ts / tt;
    ls_int[j] = mean - ls_slope[j] * c;
  }
  if (k == 1) {
    PiecewiseLossFunction f(s.lo(), s.hi(), ls_slope, ls_int, {}, {});
    f.meta.k = 1;
    return f;
  }
  std::vector<double> values(k - 1);
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const double e = edges[j + 1];
    values[j] = 0.5 * ((ls_slope[j] * e + ls_int[j]) + (ls_slope[j + 1] * e + ls_int[j + 1]));
  }
  std::vector<double> slopes(k), intercepts(k);
  slopes[0] = ls_slope[0];
  intercepts[0] = values[0] - slopes[0] * edges[1];
  for (std::size_t j = 1; j + 1 < k; ++j) {
    slopes[j] = (values[j] - values[j - 1]) / (edges[j + 1] - edges[j]);
    intercepts[j] = values[j - 1] - slopes[j] * edges[j];
  }
  slopes[k - 1] = ls_slope[k - 1];
  intercepts[k - 1] = values[k - 2] - slopes[k - 1] * edges[k - 1];
  PiecewiseLossFunction f(s.lo(), s.hi(), slopes, intercepts, breakpoints, values);
  f.meta.k = static_cast<int>(k);
  return f;
}

PiecewiseLossFunction huberize(const PiecewiseLossFunction& f, double delta) {
  if (!(delta > 0.0)) throw ValidationError("huberize: delta must be positive");
  if (!f.breakpoints().empty() && !(delta < 0.5 * f.min_spacing()))
    throw ValidationError("huberize: delta " + std::to_string(delta) + " exceeds half the minimum breakpoint spacing " +
                          std::to_string(0.5 * f.min_spacing()));
  PiecewiseLossFunction out(f.lo(), f.hi(), f.slopes(), f.intercepts(), f.breakpoints(), f.breakpoint_values(), delta);
  out.meta = f.meta;
  return out;
}

double l2_gap(const SmoothingSpline& s, const PiecewiseLossFunction& f) {
  const double sq = integrate_pieces(s, s.lo(), s.hi(), f.breakpoints(), [&](double x) {
    const double d = s.value(x) - f.linear_value(x);
    return d * d;
  });
  return std::sqrt(sq);
}

nlohmann::json to_json(const PiecewiseLossFunction& f) {
  nlohmann::json j;
  j["domain"] = {f.lo(), f.hi()};
  j["segments"] = nlohmann::json::array();
  for (int k = 0; k < f.segment_count(); ++k)
    j["segments"].push_back({{"slope", f.slopes()[static_cast<std::size_t>(k)]},
                             {"intercept", f.intercepts()[static_cast<std::size_t>(k)]}});
  j["breakpoints"] = nlohmann::json::array();
  for (std::size_t k = 0; k < f.breakpoints().size(); ++k)
    j["breakpoints"].push_back({{"eps", f.breakpoints()[k]}, {"value", f.breakpoint_values()[k]}});
  j["huber_half_width"] = f.huber_half_width();
  nlohmann::json meta = {{"lambda", f.meta.lambda},
                         {"tolerance", f.meta.tolerance},
                         {"k", f.meta.k},
                         {"k_bound", f.meta.k_bound},
                         {"continuity", f.meta.continuity}};
  meta["l2_gap"] = std::isfinite(f.meta.l2_gap) ? nlohmann::json(f.meta.l2_gap) : nlohmann::json(nullptr);
  j["fit_metadata"] = meta;
  return j;
}

PiecewiseLossFunction piecewise_from_json(const nlohmann::json& j) {
  try {
    const auto& dom = j.at("domain");
    std::vector<double> slopes, intercepts, eps, values;
    for (const auto& s : j.at("segments")) {
      slopes.push_back(s.at("slope").get<double>());
      intercepts.push_back(s.at("intercept").get<double>());
    }
    for (const auto& b : j.at("breakpoints")) {
      eps.push_back(b.at("eps").get<double>());
      values.push_back(b.at("value").get<double>());
    }
    PiecewiseLossFunction f(dom.at(0).get<double>(), dom.at(1).get<double>(), slopes, intercepts, eps, values,
                            j.at("huber_half_width").get<double>());
    if (j.contains("fit_metadata")) {
      const auto& m = j["fit_metadata"];
      f.meta.lambda = m.value("lambda", 0.0);
      f.meta.tolerance = m.value("tolerance", 0.0);
      f.meta.k = m.value("k", f.segment_count());
      f.meta.k_bound = m.value("k_bound", f.meta.k);
      f.meta.l2_gap = m.contains("l2_gap") && m["l2_gap"].is_number() ? m["l2_gap"].get<double>()
                                                                      : std::numeric_limits<double>::quiet_NaN();
      f.meta.continuity = m.value("continuity", f.meta.continuity);
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("loss function: ") + e.what());
  }
}

}  // namespace costcast::lossfit
