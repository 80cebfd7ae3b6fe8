#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "costcast/forecast/series.hpp"

namespace costcast::forecast {

/// Calendar and temperature feature set with recency terms.
///
/// Categories use reference coding (first level dropped): month 11 columns,
/// weekday 6, hour 23. The temperature coupling f(T) is
/// T^p, T^p x month, T^p x hour for p = 1..degree. Temperature variables are
/// the current hour, `avg_days` daily averages and `lag_hours` hourly lags.
///
/// full_interactions = true reproduces the 1019-column layout (full
/// weekday x hour interaction and f applied to every temperature variable).
/// The reduced default uses weekend x hour and applies f only to the current
/// temperature; the other temperature variables enter as plain powers.
struct FeatureConfig {
  int lag_hours = 4;
  int avg_days = 3;
  int temperature_degree = 3;
  bool full_interactions = false;

  void validate() const;
  /// Rows at the start of a series without enough history.
  int warmup_hours() const { return lag_hours + 24 * avg_days; }
  nlohmann::json to_json() const;
  static FeatureConfig from_json(const nlohmann::json& j);
  /// Identifies the column layout; models refuse data with another fingerprint.
  std::string fingerprint() const;
};

struct Dataset {
  Eigen::MatrixXd x;               // n x d, no bias column
  Eigen::VectorXd y;               // n actual loads
  std::vector<HourStamp> stamps;   // per row
  std::vector<int> hours;          // calendar hour 0..23 per row
  std::vector<std::string> names;  // d column names
  std::string fingerprint;

  std::size_t rows() const { return static_cast<std::size_t>(y.size()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  /// Rows with stamp in [from, to).
  Dataset slice(HourStamp from, HourStamp to) const;
};

/// Number of columns build_features produces for `fc`.
std::size_t feature_count(const FeatureConfig& fc);

/// Drops the first fc.warmup_hours() rows, which lack lag context.
Dataset build_features(const TimeSeries& series, const FeatureConfig& fc);

}  // namespace costcast::forecast
