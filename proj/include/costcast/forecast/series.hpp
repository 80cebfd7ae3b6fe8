#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace costcast::forecast {

/// Hours since 1970-01-01T00:00 (UTC, no daylight saving).
using HourStamp = std::int64_t;

/// "YYYY-MM-DD HH:00"
std::string format_stamp(HourStamp t);
/// Accepts "YYYY-MM-DD HH:00", "YYYY-MM-DDTHH:00" or "YYYY-MM-DD" (hour 0).
HourStamp parse_stamp(const std::string& text);

struct Calendar {
  int year = 1970;
  int month = 1;    // 1..12
  int day = 1;      // 1..31
  int weekday = 0;  // 0 = Monday .. 6 = Sunday
  int hour = 0;     // 0..23
};
Calendar calendar(HourStamp t);

/// Contiguous hourly load and temperature observations.
struct TimeSeries {
  HourStamp start = 0;
  std::vector<double> load;         // MW, > 0
  std::vector<double> temperature;  // degrees C

  std::size_t size() const { return load.size(); }
  HourStamp stamp(std::size_t i) const { return start + static_cast<HourStamp>(i); }
  void validate() const;
};

/// CSV `timestamp,load_mw,temperature_c`. Rows must be hourly and
/// contiguous; a gap raises ValidationError naming both timestamps.
TimeSeries load_series_csv(const std::string& path);
std::string series_to_csv(const TimeSeries& s);

}  // namespace costcast::forecast
