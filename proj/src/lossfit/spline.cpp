#include "costcast/lossfit/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "costcast/common/errors.hpp"

namespace costcast::lossfit {

SmoothingSpline::SmoothingSpline(std::vector<double> knots, std::vector<double> values, std::vector<double> second,
                                 double lambda)
    : x_(std::move(knots)), g_(std::move(values)), gamma_(std::move(second)), lambda_(lambda) {
  if (x_.size() < 2 || g_.size() != x_.size() || gamma_.size() != x_.size())
    throw ValidationError("spline: knots, values and second derivatives must have equal length >= 2");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw ValidationError("spline: knots must be strictly increasing");
}

void SmoothingSpline::check(double x) const {
  if (!(x >= lo() && x <= hi()))
    throw ValidationError("spline: evaluation point " + std::to_string(x) + " outside [" + std::to_string(lo()) +
                          ", " + std::to_string(hi()) + "]");
}

std::size_t SmoothingSpline::piece(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - x_.begin() - 1));
  return std::min(idx, x_.size() - 2);
}

double SmoothingSpline::value(double x) const {
  check(x);
  const std::size_t i = piece(x);
  const double h = x_[i + 1] - x_[i], u = x - x_[i], v = x_[i + 1] - x;
  return (u * g_[i + 1] + v * g_[i]) / h - u * v / 6.0 * ((1.0 + u / h) * gamma_[i + 1] + (1.0 + v / h) * gamma_[i]);
}

double SmoothingSpline::derivative(double x) const {
  check(x);
  const std::size_t i = piece(x);
  const double h = x_[i + 1] - x_[i], u = x - x_[i], v = x_[i + 1] - x;
  return (g_[i + 1] - g_[i]) / h + gamma_[i] * (h - 3.0 * v * v / h) / 6.0 + gamma_[i + 1] * (3.0 * u * u / h - h) / 6.0;
}

double SmoothingSpline::second_derivative(double x) const {
  check(x);
  const std::size_t i = piece(x);
  const double h = x_[i + 1] - x_[i];
  return ((x - x_[i]) * gamma_[i + 1] + (x_[i + 1] - x) * gamma_[i]) / h;
}

double SmoothingSpline::curvature_integral(double a, double b, double p) const {
  check(a);
  check(b);
  if (b <= a) return 0.0;
  // Antiderivative of |u|^p in u.
  auto prim = [p](double u) { return std::copysign(std::pow(std::abs(u), p + 1.0), u) / (p + 1.0); };
  double total = 0.0;
  for (std::size_t i = piece(a); i + 1 < x_.size() && x_[i] < b; ++i) {
    const double l = std::max(a, x_[i]), r = std::min(b, x_[i + 1]);
    if (r <= l) continue;
    const double h = x_[i + 1] - x_[i];
    const double ul = ((x_[i + 1] - l) * gamma_[i] + (l - x_[i]) * gamma_[i + 1]) / h;
    const double ur = ((x_[i + 1] - r) * gamma_[i] + (r - x_[i]) * gamma_[i + 1]) / h;
    if (std::abs(ur - ul) <= 1e-14 * std::max(std::abs(ul), std::abs(ur)))
      total += (r - l) * std::pow(std::abs(0.5 * (ul + ur)), p);
    else
      total += (r - l) / (ur - ul) * (prim(ur) - prim(ul));
  }
  return total;
}

namespace {

struct Merged {
  std::vector<double> x, y, w;
  double within_ss = 0.0;  // scatter of repeated abscissae around their mean
  double total_weight = 0.0;
};

Merged merge(const std::vector<SplineSample>& samples) {
  std::vector<SplineSample> s = samples;
  for (const auto& p : s)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ValidationError("spline: samples must be finite");
  std::sort(s.begin(), s.end(), [](const SplineSample& a, const SplineSample& b) { return a.x < b.x; });
  Merged m;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < s.size() && s[j].x == s[i].x) sum += s[j++].y;
    const double n = static_cast<double>(j - i), mean = sum / n;
    for (std::size_t k = i; k < j; ++k) m.within_ss += (s[k].y - mean) * (s[k].y - mean);
    m.x.push_back(s[i].x);
    m.y.push_back(mean);
    m.w.push_back(n);
    i = j;
  }
  m.total_weight = static_cast<double>(s.size());
  if (m.x.size() < 4) throw ValidationError("spline: need at least 4 distinct abscissae");
  return m;
}

// Symmetric pentadiagonal matrix stored by diagonals: d0[i] = M(i,i),
// d1[i] = M(i,i+1), d2[i] = M(i,i+2).
struct Penta {
  std::vector<double> d0, d1, d2;
};

// Banded LDL^T with unit lower factor of bandwidth 2.
struct BandLdl {
  std::vector<double> d, l1, l2;  // l1[i] = L(i+1,i), l2[i] = L(i+2,i)

  explicit BandLdl(const Penta& m) {
    const std::size_t n = m.d0.size();
    d.assign(n, 0.0);
    l1.assign(n, 0.0);
    l2.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double di = m.d0[i];
      if (i >= 1) di -= l1[i - 1] * l1[i - 1] * d[i - 1];
      if (i >= 2) di -= l2[i - 2] * l2[i - 2] * d[i - 2];
      d[i] = di;
      if (i + 1 < n) {
        double v = m.d1[i];
        if (i >= 1) v -= l2[i - 1] * l1[i - 1] * d[i - 1];
        l1[i] = v / di;
      }
      if (i + 2 < n) l2[i] = m.d2[i] / di;
    }
  }

  std::vector<double> solve(std::vector<double> b) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= 1) b[i] -= l1[i - 1] * b[i - 1];
      if (i >= 2) b[i] -= l2[i - 2] * b[i - 2];
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= d[i];
    for (std::size_t i = n; i-- > 0;) {
      if (i + 1 < n) b[i] -= l1[i] * b[i + 1];
      if (i + 2 < n) b[i] -= l2[i] * b[i + 2];
    }
    return b;
  }

  // Entries of the inverse within the band (Hutchinson and de Hoog recursion).
  Penta inverse_band() const {
    const std::size_t n = d.size();
    Penta s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    auto get = [&](std::size_t i, std::size_t j) {
      if (i > j) std::swap(i, j);
      if (j == i) return s.d0[i];
      if (j == i + 1) return s.d1[i];
      return s.d2[i];
    };
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t off = 3; off-- > 0;) {
        const std::size_t j = i + off;
        if (j >= n) continue;
        double v = off == 0 ? 1.0 / d[i] : 0.0;
        if (i + 1 < n) v -= l1[i] * get(i + 1, j);
        if (i + 2 < n) v -= l2[i] * get(i + 2, j);
        (off == 0 ? s.d0[i] : off == 1 ? s.d1[i] : s.d2[i]) = v;
      }
    }
    return s;
  }
};

struct Fit {
  std::vector<double> g, gamma;
  double rss = 0.0;
  double trace = 0.0;  // trace of the hat matrix
};

Fit solve(const Merged& m, double lambda, bool want_trace) {
  const std::size_t n = m.x.size(), k = n - 2;
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = m.x[i + 1] - m.x[i];
  // Column j of Q (j = 0..k-1) touches rows j, j+1, j+2.
  auto qa = [&](std::size_t j) { return 1.0 / h[j]; };
  auto qb = [&](std::size_t j) { return -1.0 / h[j] - 1.0 / h[j + 1]; };
  auto qc = [&](std::size_t j) { return 1.0 / h[j + 1]; };
  Penta mat{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  for (std::size_t j = 0; j < k; ++j) {
    mat.d0[j] = (h[j] + h[j + 1]) / 3.0 +
                lambda * (qa(j) * qa(j) / m.w[j] + qb(j) * qb(j) / m.w[j + 1] + qc(j) * qc(j) / m.w[j + 2]);
    if (j + 1 < k) mat.d1[j] = h[j + 1] / 6.0 + lambda * (qb(j) * qa(j + 1) / m.w[j + 1] + qc(j) * qb(j + 1) / m.w[j + 2]);
    if (j + 2 < k) mat.d2[j] = lambda * qc(j) * qa(j + 2) / m.w[j + 2];
  }
  std::vector<double> rhs(k);
  for (std::size_t j = 0; j < k; ++j) rhs[j] = qa(j) * m.y[j] + qb(j) * m.y[j + 1] + qc(j) * m.y[j + 2];
  const BandLdl ldl(mat);
  const auto gam = ldl.solve(rhs);

  Fit f;
  f.gamma.assign(n, 0.0);
  for (std::size_t j = 0; j < k; ++j) f.gamma[j + 1] = gam[j];
  // g = y - lambda W^{-1} Q gamma
  std::vector<double> qg(n, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    qg[j] += qa(j) * gam[j];
    qg[j + 1] += qb(j) * gam[j];
    qg[j + 2] += qc(j) * gam[j];
  }
  f.g.resize(n);
  f.rss = m.within_ss;
  for (std::size_t i = 0; i < n; ++i) {
    f.g[i] = m.y[i] - lambda * qg[i] / m.w[i];
    f.rss += m.w[i] * (m.y[i] - f.g[i]) * (m.y[i] - f.g[i]);
  }
  if (want_trace) {
    const Penta inv = ldl.inverse_band();
    auto sig = [&](std::size_t a, std::size_t b) {
      if (a > b) std::swap(a, b);
      if (b == a) return inv.d0[a];
      if (b == a + 1) return inv.d1[a];
      return inv.d2[a];
    };
    // Row i of Q has entries in columns i-2 (qc), i-1 (qb), i (qa).
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<std::size_t, double>> row;
      if (i >= 2 && i - 2 < k) row.emplace_back(i - 2, qc(i - 2));
      if (i >= 1 && i - 1 < k) row.emplace_back(i - 1, qb(i - 1));
      if (i < k) row.emplace_back(i, qa(i));
      double qmq = 0.0;
      for (const auto& [a, va] : row)
        for (const auto& [b, vb] : row) qmq += va * vb * sig(a, b);
      tr += 1.0 - lambda * qmq / m.w[i];
    }
    f.trace = tr;
  }
  return f;
}

SmoothingSpline make(const Merged& m, const Fit& f, double lambda) {
  SmoothingSpline s(m.x, f.g, f.gamma, lambda);
  s.residual_sum_squares = f.rss;
  double rough = 0.0;
  for (std::size_t i = 0; i + 1 < m.x.size(); ++i) {
    const double h = m.x[i + 1] - m.x[i], a = f.gamma[i], b = f.gamma[i + 1];
    rough += h * (a * a + a * b + b * b) / 3.0;
  }
  s.roughness = rough;
  return s;
}

double gcv(const Merged& m, double lambda) {
  const Fit f = solve(m, lambda, true);
  const double n = m.total_weight;
  const double denom = 1.0 - f.trace / n;
  // Near interpolation the score is 0/0 and rounding decides the winner.
  if (!(denom >= 0.05) || !std::isfinite(f.rss)) return std::numeric_limits<double>::infinity();
  return (f.rss / n) / (denom * denom);
}

// Ratio that puts lambda * Q^T W^{-1} Q on the scale of R.
double lambda_scale(const Merged& m) {
  double tr_r = 0.0, tr_q = 0.0;
  for (std::size_t j = 0; j + 2 < m.x.size(); ++j) {
    const double h0 = m.x[j + 1] - m.x[j], h1 = m.x[j + 2] - m.x[j + 1];
    tr_r += (h0 + h1) / 3.0;
    tr_q += 1.0 / (h0 * h0 * m.w[j]) + (1.0 / h0 + 1.0 / h1) * (1.0 / h0 + 1.0 / h1) / m.w[j + 1] +
            1.0 / (h1 * h1 * m.w[j + 2]);
  }
  return tr_r / tr_q;
}

}  // namespace

SmoothingSpline fit_spline(const std::vector<SplineSample>& samples, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("spline: lambda must be finite and >= 0");
  const Merged m = merge(samples);
  return make(m, solve(m, lambda, false), lambda);
}

double gcv_score(const std::vector<SplineSample>& samples, double lambda) { return gcv(merge(samples), lambda); }

SmoothingSpline fit_spline_gcv(const std::vector<SplineSample>& samples) {
  const Merged m = merge(samples);
  const double base = lambda_scale(m);
  // Coarse grid in log10(lambda / base), then golden-section refinement.
  double best_t = 0.0, best = std::numeric_limits<double>::infinity();
  const double t_lo = -6.0, t_hi = 10.0, step = 0.25;
  for (double t = t_lo; t <= t_hi + 1e-12; t += step) {
    const double v = gcv(m, base * std::pow(10.0, t));
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double a = best_t - step, b = best_t + step;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = gcv(m, base * std::pow(10.0, c)), fd = gcv(m, base * std::pow(10.0, d));
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = gcv(m, base * std::pow(10.0, c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = gcv(m, base * std::pow(10.0, d));
    }
  }
  if (!std::isfinite(best)) throw ValidationError("spline: GCV found no admissible smoothing parameter");
  double t = 0.5 * (a + b);
  if (gcv(m, base * std::pow(10.0, t)) > best) t = best_t;
  const double lambda = base * std::pow(10.0, t);
  return make(m, solve(m, lambda, false), lambda);
}

}  // namespace costcast::lossfit
