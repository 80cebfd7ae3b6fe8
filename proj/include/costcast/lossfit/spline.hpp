#pragma once

#include <utility>
#include <vector>

namespace costcast::lossfit {

/// Natural cubic smoothing spline in value / second-derivative form.
class SmoothingSpline {
 public:
  SmoothingSpline(std::vector<double> knots, std::vector<double> values, std::vector<double> second, double lambda);

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return g_; }
  const std::vector<double>& second_derivatives() const { return gamma_; }
  double lambda() const { return lambda_; }
  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

  /// Throws ValidationError outside [lo, hi].
  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  /// Exact integral of |s''|^p over [a, b] (s'' is piecewise linear).
  double curvature_integral(double a, double b, double p) const;

  /// Index of the piece containing x (clamped to the last piece at hi()).
  std::size_t piece(double x) const;

  double residual_sum_squares = 0.0;  // sum of squared residuals at the samples
  double roughness = 0.0;             // integral of s''^2

 private:
  void check(double x) const;

  std::vector<double> x_, g_, gamma_;
  double lambda_ = 0.0;
};

struct SplineSample {
  double x = 0.0;
  double y = 0.0;
};

/// Minimises sum (y - s(x))^2 + lambda * integral s''^2 over natural cubic
/// splines. Repeated abscissae are merged with their count as weight.
SmoothingSpline fit_spline(const std::vector<SplineSample>& samples, double lambda);

/// Smoothing parameter chosen by generalised cross-validation.
SmoothingSpline fit_spline_gcv(const std::vector<SplineSample>& samples);

/// GCV score for a given lambda (exposed for tests).
double gcv_score(const std::vector<SplineSample>& samples, double lambda);

}  // namespace costcast::lossfit
