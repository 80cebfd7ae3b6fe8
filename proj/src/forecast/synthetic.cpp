#include "costcast/forecast/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "costcast/common/errors.hpp"
#include "costcast/common/rng.hpp"

namespace costcast::forecast {

namespace {

constexpr std::array<double, 24> kHourShape{0.66, 0.63, 0.61, 0.60, 0.61, 0.65, 0.72, 0.78, 0.80, 0.81, 0.82, 0.83,
                                            0.84, 0.86, 0.90, 0.95, 0.98, 1.00, 0.99, 0.95, 0.90, 0.84, 0.77, 0.70};
constexpr std::array<double, 7> kWeekdayFactor{1.0, 1.0, 1.0, 1.0, 0.99, 0.93, 0.88};
constexpr int kWarmupHours = 48;

}  // namespace

void SyntheticConfig::validate() const {
  parse_stamp(start);
  if (days < 3) throw ValidationError("synthetic: days must be at least 3");
  if (!(peak_mw > 0.0)) throw ValidationError("synthetic: peak_mw must be positive");
  if (!(noise >= 0.0)) throw ValidationError("synthetic: noise must be non-negative");
}

TimeSeries generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const HourStamp start = parse_stamp(cfg.start);
  const std::size_t total = static_cast<std::size_t>(cfg.days) * 24 + kWarmupHours;
  const HourStamp first = start - kWarmupHours;

  std::vector<double> temp(total);
  double weather = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    const HourStamp t = first + static_cast<HourStamp>(i);
    const Calendar c = calendar(t);
    if (c.hour == 0 || i == 0) weather = 0.75 * weather + 2.5 * standard_normal(rng);
    const double day_of_year = static_cast<double>((t / 24) % 365) + 0.5;
    const double seasonal = 13.0 - 11.0 * std::cos(2.0 * M_PI * (day_of_year - 20.0) / 365.25);
    const double diurnal = 4.5 * std::sin(2.0 * M_PI * (c.hour - 9) / 24.0);
    temp[i] = seasonal + diurnal + weather + 0.6 * standard_normal(rng);
  }

  TimeSeries s;
  s.start = start;
  s.load.resize(total - kWarmupHours);
  s.temperature.assign(temp.begin() + kWarmupHours, temp.end());
  double noise = 0.0;
  double day_mean = 0.0;
  for (std::size_t i = kWarmupHours; i < total; ++i) {
    const HourStamp t = first + static_cast<HourStamp>(i);
    const Calendar c = calendar(t);
    day_mean = 0.0;
    for (std::size_t k = i - 24; k < i; ++k) day_mean += temp[k];
    day_mean /= 24.0;
    const double effective = 0.5 * temp[i] + 0.2 * temp[i - 2] + 0.3 * day_mean;
    const double heating = std::max(0.0, 14.0 - effective);
    const double cooling = std::max(0.0, effective - 20.0);
    const double shape = kHourShape[static_cast<std::size_t>(c.hour)];
    const double years = static_cast<double>(t - start) / (24.0 * 365.25);
    const double weather_factor = 1.0 + 0.012 * heating + 0.0009 * cooling * cooling * (0.5 + 0.5 * shape);
    noise = 0.8 * noise + cfg.noise * 0.6 * standard_normal(rng);
    s.load[i - kWarmupHours] =
        shape * kWeekdayFactor[static_cast<std::size_t>(c.weekday)] * (1.0 + 0.015 * years) * weather_factor *
        (1.0 + noise);
  }
  const double peak = *std::max_element(s.load.begin(), s.load.end());
  for (double& v : s.load) v *= cfg.peak_mw / peak;
  s.validate();
  return s;
}

}  // namespace costcast::forecast
