#pragma once

#include <cstdint>
#include <string>

#include "costcast/forecast/series.hpp"

namespace costcast::forecast {

/// Parameters of the synthetic load/temperature history used in place of a
/// public load-forecasting dataset.
struct SyntheticConfig {
  std::string start = "2019-01-01";
  int days = 913;            // 2 years of training data plus 6 months of test data
  std::uint64_t seed = 1;
  double peak_mw = 320.0;    // the series is rescaled so its maximum equals this
  double noise = 0.05;       // standard deviation of the multiplicative AR(1) load noise

  void validate() const;
};

/// Temperature: seasonal and diurnal sinusoids plus AR(1) day-level weather.
/// Load: a fixed 24-hour shape scaled by weekday, trend and a heating/cooling
/// response to a recency-weighted temperature, with AR(1) noise.
TimeSeries generate_synthetic(const SyntheticConfig& cfg);

}  // namespace costcast::forecast
