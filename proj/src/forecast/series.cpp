#include "costcast/forecast/series.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"

namespace costcast::forecast {

namespace {

using std::chrono::days;
using std::chrono::sys_days;

HourStamp floor_div(HourStamp a, HourStamp b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

Calendar calendar(HourStamp t) {
  const HourStamp day = floor_div(t, 24);
  const sys_days d{days{day}};
  const std::chrono::year_month_day ymd{d};
  const std::chrono::weekday wd{d};
  Calendar c;
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  c.weekday = static_cast<int>((wd.c_encoding() + 6) % 7);
  c.hour = static_cast<int>(t - day * 24);
  return c;
}

std::string format_stamp(HourStamp t) {
  const Calendar c = calendar(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:00", c.year, c.month, c.day, c.hour);
  return buf;
}

HourStamp parse_stamp(const std::string& text) {
  int y = 0, m = 0, d = 0, h = 0, mi = 0;
  char sep = 0;
  int consumed = 0;
  bool ok = false;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &m, &d, &sep, &h, &mi, &consumed) == 6)
    ok = (sep == ' ' || sep == 'T') && consumed == static_cast<int>(text.size()) && mi == 0;
  else if (std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &y, &m, &d, &consumed) == 3)
    ok = consumed == static_cast<int>(text.size());
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h < 0 || h > 23) throw ParseError("invalid timestamp '" + text + "'");
  return static_cast<HourStamp>(sys_days{ymd}.time_since_epoch().count()) * 24 + h;
}

void TimeSeries::validate() const {
  if (load.size() != temperature.size())
    throw ValidationError("series: load and temperature columns differ in length");
  for (std::size_t i = 0; i < load.size(); ++i) {
    if (!std::isfinite(load[i]) || !(load[i] > 0.0))
      throw ValidationError("series: load at " + format_stamp(stamp(i)) + " must be positive and finite");
    if (!std::isfinite(temperature[i]))
      throw ValidationError("series: temperature at " + format_stamp(stamp(i)) + " is not finite");
  }
}

TimeSeries load_series_csv(const std::string& path) {
  const auto table = csv::read(path);
  const auto ct = table.column("timestamp"), cl = table.column("load_mw"), cx = table.column("temperature_c");
  TimeSeries s;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const HourStamp t = parse_stamp(row.at(ct));
    if (r == 0) {
      s.start = t;
    } else if (t != s.stamp(r)) {
      throw ValidationError("series: gap between " + format_stamp(s.stamp(r - 1)) + " and " + format_stamp(t) +
                            " in " + path);
    }
    s.load.push_back(csv::parse_double(row.at(cl), "load_mw"));
    s.temperature.push_back(csv::parse_double(row.at(cx), "temperature_c"));
  }
  if (s.size() == 0) throw ValidationError("series: " + path + " has no rows");
  s.validate();
  return s;
}

std::string series_to_csv(const TimeSeries& s) {
  csv::Writer w({"timestamp", "load_mw", "temperature_c"});
  for (std::size_t i = 0; i < s.size(); ++i)
    w.row({format_stamp(s.stamp(i)), csv::format_double(s.load[i]), csv::format_double(s.temperature[i])});
  return w.str();
}

}  // namespace costcast::forecast
