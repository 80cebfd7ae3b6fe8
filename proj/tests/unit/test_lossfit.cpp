#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "doctest.h"

#include "costcast/common/errors.hpp"
#include "costcast/common/rng.hpp"
#include "costcast/lossfit/variant.hpp"

using namespace costcast;
using namespace costcast::lossfit;

namespace {

// Spline whose second derivative is the linear interpolant of f2 at the knots
// and whose knot values are f; exact for polynomials of degree <= 2.
SmoothingSpline from_function(double lo, double hi, int knots, const std::function<double(double)>& f,
                              const std::function<double(double)>& f2) {
  std::vector<double> x(knots), g(knots), gamma(knots);
  for (int i = 0; i < knots; ++i) {
    x[i] = lo + (hi - lo) * i / (knots - 1);
    g[i] = f(x[i]);
    gamma[i] = f2(x[i]);
  }
  return SmoothingSpline(x, g, gamma, 0.0);
}

// Composite Simpson rule, the independent quadrature oracle.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

double bisect(const std::function<double(double)>& f, double a, double b) {
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    const double m = 0.5 * (a + b);
    (f(m) < 0.0 ? a : b) = m;
  }
  return 0.5 * (a + b);
}

double oracle_gap(const SmoothingSpline& s, const PiecewiseLossFunction& f) {
  const auto sq = [&](double x) {
    const double d = s.value(x) - f.linear_value(x);
    return d * d;
  };
  return std::sqrt(simpson(sq, s.lo(), s.hi(), 40000));
}

std::vector<SplineSample> sample(int n, double lo, double hi, const std::function<double(double)>& f, double noise,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SplineSample> out;
  for (int i = 0; i < n; ++i) {
    const double x = uniform(rng, lo, hi);
    out.push_back({x, f(x) + (noise > 0.0 ? uniform(rng, -noise, noise) : 0.0)});
  }
  return out;
}

PiecewiseLossFunction kink_example(double delta) {
  return PiecewiseLossFunction(-1.0, 1.0, {-2.0, 1.0}, {0.0, 0.0}, {0.0}, {0.0}, delta);
}

const std::vector<scenario::LossSample>& shipped_losses() {
  static const std::vector<scenario::LossSample> samples = [] {
    const auto net = grid::load_network(std::string(COSTCAST_SOURCE_DIR) + "/data/network.json");
    const auto day = grid::load_profile_csv(std::string(COSTCAST_SOURCE_DIR) + "/data/typical_day.csv");
    const auto rc = dispatch::ReserveConfig::fraction_of_capacity(net, day.hours(), 0.025);
    scenario::ScenarioConfig cfg;
    cfg.count = 200;
    cfg.seed = 7;
    return scenario::build_loss_dataset(net, rc, day, cfg);
  }();
  return samples;
}

}  // namespace

TEST_CASE("very large lambda gives the least-squares straight line") {
  const auto data = sample(60, -1.0, 1.0, [](double x) { return std::exp(x); }, 0.1, 11);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : data) {
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  const double n = static_cast<double>(data.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icpt = (sy - slope * sx) / n;
  const auto s = fit_spline(data, 1e12);
  for (double x : {-0.9, -0.3, 0.0, 0.4, 0.95}) CHECK(s.value(x) == doctest::Approx(slope * x + icpt).epsilon(1e-6));
  CHECK(s.roughness < 1e-10);
}

TEST_CASE("lambda = 0 interpolates distinct points") {
  const auto data = sample(25, -1.0, 1.0, [](double x) { return std::sin(3.0 * x); }, 0.2, 12);
  const auto s = fit_spline(data, 0.0);
  for (const auto& p : data) CHECK(s.value(p.x) == doctest::Approx(p.y).epsilon(1e-9));
  CHECK(s.residual_sum_squares < 1e-16);
  // Natural end conditions.
  CHECK(std::abs(s.second_derivative(s.lo())) < 1e-9);
  CHECK(std::abs(s.second_derivative(s.hi())) < 1e-9);
}

TEST_CASE("spline fitting rejects degenerate input") {
  CHECK_THROWS_AS(fit_spline({{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}, {0.1, 4.0}}, 1.0), ValidationError);
  CHECK_THROWS_AS(fit_spline({{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}, {0.4, 4.0}}, -1.0), ValidationError);
  const auto s = fit_spline(sample(10, 0.0, 1.0, [](double x) { return x; }, 0.0, 1), 0.0);
  CHECK_THROWS_AS(s.value(s.hi() + 1e-3), ValidationError);
}

TEST_CASE("GCV spline recovers eps^2 from noisy samples") {
  const double noise = 0.05;
  const auto data = sample(300, -1.0, 1.0, [](double x) { return x * x; }, noise, 13);
  const auto s = fit_spline_gcv(data);
  CHECK(s.lambda() > 0.0);
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = std::clamp(-1.0 + i * 0.01, s.lo(), s.hi());
    worst = std::max(worst, std::abs(s.value(x) - x * x));
  }
  CHECK(worst < noise);
}

TEST_CASE("eps^2 on [-1,1] with tolerance 0.05 needs five segments") {
  const auto s = from_function(-1.0, 1.0, 9, [](double x) { return x * x; }, [](double) { return 2.0; });
  CHECK(curvature_factor(s) == doctest::Approx(std::pow(2.0, 3.5)).epsilon(1e-12));
  const int k = breakpoint_count(s, 0.05);
  CHECK(k == 5);
  CHECK(k == static_cast<int>(std::ceil(std::sqrt(std::pow(2.0, 3.5) / (std::sqrt(120.0) * 0.05)))));

  const auto bps = place_breakpoints(s, k);
  REQUIRE(bps.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(bps[i] == doctest::Approx(-1.0 + 0.4 * (i + 1)).epsilon(1e-9));
  const auto f = linearize(s, bps);
  const double bound = std::pow(2.0, 3.5) / (std::sqrt(120.0) * 25.0);
  CHECK(bound == doctest::Approx(0.0413).epsilon(1e-3));
  const double gap = oracle_gap(s, f);
  CHECK(gap <= bound);
  CHECK(l2_gap(s, f) == doctest::Approx(gap).epsilon(1e-6));
}

TEST_CASE("a straight-line spline needs one segment and is reproduced exactly") {
  const auto s = from_function(-0.5, 0.5, 7, [](double x) { return 3.0 * x + 1.0; }, [](double) { return 0.0; });
  CHECK(breakpoint_count(s, 1e-6) == 1);
  const auto f = linearize(s, {});
  REQUIRE(f.segment_count() == 1);
  CHECK(f.slopes()[0] == doctest::Approx(3.0));
  CHECK(f.intercepts()[0] == doctest::Approx(1.0));
  CHECK(l2_gap(s, f) < 1e-12);
}

TEST_CASE("breakpoint count is monotone in the tolerance") {
  const auto s = from_function(-1.0, 1.0, 41, [](double x) { return std::exp(2.0 * x); },
                               [](double x) { return 4.0 * std::exp(2.0 * x); });
  int prev = breakpoint_count(s, 1e-4);
  for (double tol = 2e-4; tol < 10.0; tol *= 2.0) {
    const int k = breakpoint_count(s, tol);
    CHECK(k >= 1);
    CHECK(k <= prev);
    CHECK(l2_error_bound(s, k) <= tol);
    if (k > 1) CHECK(l2_error_bound(s, k - 1) > tol);
    prev = k;
  }
}

TEST_CASE("breakpoint placement follows the curvature density") {
  SUBCASE("constant curvature gives equal spacing") {
    const auto s = from_function(0.0, 3.0, 13, [](double x) { return 0.5 * x * x; }, [](double) { return 1.0; });
    const auto bps = place_breakpoints(s, 6);
    REQUIRE(bps.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(bps[i] == doctest::Approx(0.5 * (i + 1)).epsilon(1e-9));
  }
  SUBCASE("curvature supported on [0, 0.05] keeps every breakpoint there") {
    const SmoothingSpline s({-1.0, 0.0, 0.025, 0.05, 1.0}, {0.0, 0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0, 0.0}, 0.0);
    for (int k : {2, 3, 6, 10})
      for (double b : place_breakpoints(s, k)) {
        CHECK(b >= 0.0);
        CHECK(b <= 0.05);
      }
  }
  SUBCASE("eps^4 quantiles match a quadrature oracle") {
    const auto s = from_function(-1.0, 1.0, 2001, [](double x) { return std::pow(x, 4); },
                                 [](double x) { return 12.0 * x * x; });
    const auto density = [](double x) { return std::pow(12.0 * x * x, 0.4); };
    const double total = simpson(density, -1.0, 1.0);
    const auto bps = place_breakpoints(s, 4);
    REQUIRE(bps.size() == 3);
    for (int k = 1; k <= 3; ++k) {
      const double target = k / 4.0;
      const double expect = bisect([&](double e) { return simpson(density, -1.0, e, 4000) / total - target; }, -1.0, 1.0);
      CHECK(bps[k - 1] == doctest::Approx(expect).epsilon(1e-4));
    }
    CHECK(bps[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(bps[2] == doctest::Approx(std::pow(0.5, 1.0 / 1.8)).epsilon(1e-4));
  }
  SUBCASE("zero curvature falls back to uniform placement") {
    const auto s = from_function(0.0, 1.0, 5, [](double x) { return x; }, [](double) { return 0.0; });
    const auto bps = place_breakpoints(s, 4);
    REQUIRE(bps.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(bps[i] == doctest::Approx(0.25 * (i + 1)));
  }
}

TEST_CASE("a convex spline yields nondecreasing slopes") {
  const auto s = from_function(-1.0, 1.0, 30, [](double x) { return std::exp(x) + std::abs(x); },
                               [](double x) { return std::exp(x); });
  for (int k : {2, 3, 5, 8, 13}) {
    const auto f = linearize(s, place_breakpoints(s, k));
    for (int i = 1; i < f.segment_count(); ++i) CHECK(f.slopes()[i - 1] <= f.slopes()[i] + 1e-12);
  }
}

TEST_CASE("linearize keeps pieces joined at the shared breakpoint value") {
  const auto s = from_function(-1.0, 1.0, 17, [](double x) { return std::sin(2.0 * x); },
                               [](double x) { return -4.0 * std::sin(2.0 * x); });
  const auto f = linearize(s, place_breakpoints(s, 6));
  for (std::size_t k = 0; k < f.breakpoints().size(); ++k) {
    const double e = f.breakpoints()[k], l = f.breakpoint_values()[k];
    CHECK(std::abs(f.slopes()[k] * e + f.intercepts()[k] - l) <= 1e-9 * (1 + std::abs(l)));
    CHECK(std::abs(f.slopes()[k + 1] * e + f.intercepts()[k + 1] - l) <= 1e-9 * (1 + std::abs(l)));
  }
}

TEST_CASE("Huber transition values on the kink example") {
  const auto f = kink_example(0.1);
  CHECK(f.value(0.0) == doctest::Approx(0.075));
  CHECK(f.value(0.1) == doctest::Approx(0.1));
  CHECK(f.value(-0.1) == doctest::Approx(0.2));
  const auto [v, d] = f.evaluate(0.05);
  CHECK(v == doctest::Approx(0.06875));
  CHECK(d == doctest::Approx(0.25));
  // Matching conditions at both ends of the band.
  CHECK(f.derivative(0.1) == doctest::Approx(1.0));
  CHECK(f.derivative(-0.1) == doctest::Approx(-2.0));
  CHECK(f.value(0.5) == doctest::Approx(0.5));
  CHECK(f.value(-0.5) == doctest::Approx(1.0));
}

TEST_CASE("equal slopes make the transition a straight line") {
  const PiecewiseLossFunction f(-1.0, 1.0, {0.7, 0.7}, {0.3, 0.3}, {0.0}, {0.3}, 0.2);
  for (double x : {-0.2, -0.1, 0.0, 0.05, 0.2}) {
    CHECK(f.value(x) == doctest::Approx(0.7 * x + 0.3));
    CHECK(f.derivative(x) == doctest::Approx(0.7));
  }
}

TEST_CASE("Huber half-width must stay below half the breakpoint spacing") {
  const auto plain = kink_example(0.0);
  CHECK_THROWS_AS(huberize(plain, 0.5), ValidationError);
  CHECK_THROWS_AS(huberize(plain, 0.0), ValidationError);
  CHECK_NOTHROW(huberize(plain, 0.49));
}

TEST_CASE("mse variant is eps^2 with derivative 2 eps") {
  const auto v = fit_variant({}, LossKind::mse);
  const auto [val, d] = v.evaluate(3, 0.05);
  CHECK(val == doctest::Approx(0.0025));
  CHECK(d == doctest::Approx(0.1));
}

TEST_CASE("linear variant on |eps| has slopes -1 and +1") {
  std::vector<scenario::LossSample> samples;
  for (int i = -50; i <= 50; ++i) {
    const double e = 0.002 * i;
    samples.push_back({0, (i + 50) % 24, e, std::abs(e), false});
  }
  const auto v = fit_variant(samples, LossKind::linear);
  const auto& f = v.functions().at(0);
  REQUIRE(f.segment_count() == 2);
  CHECK(f.breakpoints()[0] == 0.0);
  CHECK(f.slopes()[0] == doctest::Approx(-1.0));
  CHECK(f.slopes()[1] == doctest::Approx(1.0));
}

TEST_CASE("fitted functions are C1 and match finite differences") {
  const auto data = sample(400, -0.1, 0.1, [](double x) { return x < 0 ? 300.0 * x * x - 50 * x : 80.0 * x * x; }, 0.02,
                           21);
  FitOptions opts;
  const auto f = fit_piecewise(data, opts);
  REQUIRE(f.segment_count() >= 2);
  const double d = f.huber_half_width();
  for (double e : f.breakpoints())
    for (double t : {e - d, e, e + d}) {
      const auto l = f.evaluate(std::nextafter(t, -1.0)), r = f.evaluate(std::nextafter(t, 1.0));
      CHECK(std::abs(l.first - r.first) <= 1e-10);
      CHECK(std::abs(l.second - r.second) <= 1e-8);
    }
  Rng rng(5);
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform(rng, f.lo() + h, f.hi() - h);
    const double fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
    const double an = f.derivative(x);
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("loss function JSON round trip is exact") {
  const auto data = sample(200, -0.1, 0.1, [](double x) { return std::exp(20 * x); }, 0.05, 23);
  const auto f = fit_piecewise(data, {});
  const auto g = piecewise_from_json(nlohmann::json::parse(to_json(f).dump()));
  CHECK(g.slopes() == f.slopes());
  CHECK(g.intercepts() == f.intercepts());
  CHECK(g.breakpoints() == f.breakpoints());
  CHECK(g.huber_half_width() == f.huber_half_width());
  CHECK(g.meta.k == f.meta.k);
  CHECK(g.meta.lambda == f.meta.lambda);
  Rng rng(9);
  std::vector<double> pts = f.breakpoints();
  for (int i = 0; i < 100; ++i) pts.push_back(uniform(rng, f.lo(), f.hi()));
  for (double x : pts) CHECK(g.value(x) == f.value(x));

  const LossVariant v(LossKind::daily, {f});
  const std::string path = std::string(COSTCAST_BINARY_DIR) + "/roundtrip_loss.json";
  save_variant(path, v);
  const auto w = load_variant(path);
  CHECK(w.kind() == LossKind::daily);
  for (double x : pts) CHECK(w.evaluate(0, x).first == v.evaluate(0, x).first);
  std::remove(path.c_str());
}

TEST_CASE("malformed loss files are rejected") {
  CHECK_THROWS_AS(variant_from_json(nlohmann::json::parse(R"({"kind":"weekly","functions":[]})")), ParseError);
  CHECK_THROWS_AS(variant_from_json(nlohmann::json::parse(R"({"kind":"daily"})")), ParseError);
  CHECK_THROWS_AS(loss_kind_from_string("cubic"), UsageError);
}

TEST_CASE("shipped loss data: hourly, daily and linear variants") {
  const auto& samples = shipped_losses();
  const auto hourly = fit_variant(samples, LossKind::hourly);
  REQUIRE(hourly.functions().size() == 24);
  int kmin = 1000, kmax = 0;
  for (const auto& f : hourly.functions()) {
    kmin = std::min(kmin, f.segment_count());
    kmax = std::max(kmax, f.segment_count());
    CHECK(f.segment_count() >= f.meta.k_bound);
    CHECK(f.meta.l2_gap <= f.meta.tolerance);
    CHECK(f.huber_half_width() < 0.5 * f.min_spacing());
  }
  CHECK(kmin < kmax);

  // Hours 8 and 19 (indices 7 and 18): averaged over the under-forecast side,
  // the pooled curve lies between them.
  const auto daily = fit_variant(samples, LossKind::daily);
  double h8 = 0.0, h19 = 0.0, d = 0.0;
  for (int i = 0; i <= 60; ++i) {
    const double e = -0.1 + 0.001 * i;
    h8 += hourly.evaluate(7, e).first;
    h19 += hourly.evaluate(18, e).first;
    d += daily.evaluate(0, e).first;
  }
  MESSAGE("mean loss on [-0.1, -0.04]: hour 8 " << h8 / 61 << ", daily " << d / 61 << ", hour 19 " << h19 / 61);
  CHECK(h8 < h19);
  CHECK(d > h8);
  CHECK(d < h19);

  const auto linear = fit_variant(samples, LossKind::linear);
  CHECK(linear.functions()[0].slopes()[0] < 0.0);
  CHECK(linear.functions()[0].slopes()[1] > 0.0);
}

TEST_CASE("disabling refinement keeps the bound's segment count") {
  const auto& samples = shipped_losses();
  FitOptions opts;
  opts.refine_segments = false;
  std::vector<SplineSample> hour;
  for (const auto& s : samples)
    if (s.hour == 0) hour.push_back({s.fep, s.fepc});
  const auto f = fit_piecewise(hour, opts);
  CHECK(f.segment_count() == f.meta.k_bound);
  const auto s = fit_spline_gcv(hour);
  CHECK(l2_error_bound(s, f.segment_count()) <= f.meta.tolerance);
}
