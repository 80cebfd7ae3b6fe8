#include "costcast/forecast/features.hpp"

#include <cmath>

#include "costcast/common/errors.hpp"
#include "costcast/common/hash.hpp"

namespace costcast::forecast {

namespace {

// Appends columns one row at a time; the same code path produces names.
class RowBuilder {
 public:
  RowBuilder(double* out, std::vector<std::string>* names) : out_(out), names_(names) {}

  void add(double v, const std::string& name) {
    if (out_) out_[n_] = v;
    if (names_) names_->push_back(name);
    ++n_;
  }
  std::size_t size() const { return n_; }

 private:
  double* out_;
  std::vector<std::string>* names_;
  std::size_t n_ = 0;
};

struct Context {
  double trend;
  int month, weekday, hour;
  std::vector<std::pair<std::string, double>> temps;  // (name, value); first is the current hour
};

void one_hot(RowBuilder& b, const std::string& prefix, int value, int first, int last, double scale = 1.0,
             const std::string& suffix = "") {
  for (int level = first + 1; level <= last; ++level)
    b.add(value == level ? scale : 0.0, prefix + std::to_string(level) + suffix);
}

void coupling(RowBuilder& b, const FeatureConfig& fc, const Context& c, const std::string& name, double t) {
  for (int p = 1; p <= fc.temperature_degree; ++p) {
    const double tp = std::pow(t, p);
    const std::string base = name + "^" + std::to_string(p);
    b.add(tp, base);
    one_hot(b, base + "*M", c.month, 1, 12, tp);
    one_hot(b, base + "*H", c.hour, 0, 23, tp);
  }
}

void emit(RowBuilder& b, const FeatureConfig& fc, const Context& c) {
  b.add(c.trend, "trend");
  one_hot(b, "M", c.month, 1, 12);
  one_hot(b, "W", c.weekday, 0, 6);
  one_hot(b, "H", c.hour, 0, 23);
  if (fc.full_interactions) {
    for (int w = 1; w <= 6; ++w) one_hot(b, "W" + std::to_string(w) + "*H", c.hour, 0, 23, c.weekday == w ? 1.0 : 0.0);
  } else {
    one_hot(b, "weekend*H", c.hour, 0, 23, c.weekday >= 5 ? 1.0 : 0.0);
  }
  for (std::size_t k = 0; k < c.temps.size(); ++k) {
    const auto& [name, t] = c.temps[k];
    if (k == 0 || fc.full_interactions) {
      coupling(b, fc, c, name, t);
    } else {
      for (int p = 1; p <= fc.temperature_degree; ++p) b.add(std::pow(t, p), name + "^" + std::to_string(p));
    }
  }
}

Context context_at(const TimeSeries& s, std::size_t i, const FeatureConfig& fc) {
  const Calendar cal = calendar(s.stamp(i));
  Context c;
  c.trend = static_cast<double>(i) / (24.0 * 365.25);
  c.month = cal.month;
  c.weekday = cal.weekday;
  c.hour = cal.hour;
  c.temps.emplace_back("T", s.temperature[i]);
  for (int d = 1; d <= fc.avg_days; ++d) {
    double sum = 0.0;
    for (int k = 0; k < 24; ++k) sum += s.temperature[i - static_cast<std::size_t>(24 * d - k)];
    c.temps.emplace_back("Tavg" + std::to_string(d), sum / 24.0);
  }
  for (int h = 1; h <= fc.lag_hours; ++h)
    c.temps.emplace_back("Tlag" + std::to_string(h), s.temperature[i - static_cast<std::size_t>(h)]);
  return c;
}

}  // namespace

void FeatureConfig::validate() const {
  if (lag_hours < 0) throw ValidationError("features: lag_hours must be >= 0");
  if (avg_days < 0) throw ValidationError("features: avg_days must be >= 0");
  if (temperature_degree < 1) throw ValidationError("features: temperature_degree must be >= 1");
}

nlohmann::json FeatureConfig::to_json() const {
  return {{"lag_hours", lag_hours},
          {"avg_days", avg_days},
          {"temperature_degree", temperature_degree},
          {"full_interactions", full_interactions}};
}

FeatureConfig FeatureConfig::from_json(const nlohmann::json& j) {
  FeatureConfig fc;
  fc.lag_hours = j.value("lag_hours", fc.lag_hours);
  fc.avg_days = j.value("avg_days", fc.avg_days);
  fc.temperature_degree = j.value("temperature_degree", fc.temperature_degree);
  fc.full_interactions = j.value("full_interactions", fc.full_interactions);
  fc.validate();
  return fc;
}

std::string FeatureConfig::fingerprint() const { return costcast::fingerprint("features-v1:" + to_json().dump()); }

std::size_t feature_count(const FeatureConfig& fc) {
  fc.validate();
  Context c{0.0, 1, 0, 0, {}};
  c.temps.assign(static_cast<std::size_t>(1 + fc.avg_days + fc.lag_hours), {"T", 0.0});
  RowBuilder b(nullptr, nullptr);
  emit(b, fc, c);
  return b.size();
}

Dataset build_features(const TimeSeries& series, const FeatureConfig& fc) {
  fc.validate();
  series.validate();
  const std::size_t warm = static_cast<std::size_t>(fc.warmup_hours());
  if (series.size() <= warm)
    throw ValidationError("features: series of " + std::to_string(series.size()) + " hours is shorter than the " +
                          std::to_string(warm) + "-hour lag window");
  const std::size_t n = series.size() - warm, d = feature_count(fc);
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.y.resize(static_cast<Eigen::Index>(n));
  ds.stamps.resize(n);
  ds.hours.resize(n);
  ds.fingerprint = fc.fingerprint();
  std::vector<double> row(d);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = r + warm;
    const Context c = context_at(series, i, fc);
    RowBuilder b(row.data(), r == 0 ? &ds.names : nullptr);
    emit(b, fc, c);
    for (std::size_t k = 0; k < d; ++k) ds.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
    ds.y(static_cast<Eigen::Index>(r)) = series.load[i];
    ds.stamps[r] = series.stamp(i);
    ds.hours[r] = c.hour;
  }
  return ds;
}

Dataset Dataset::slice(HourStamp from, HourStamp to) const {
  std::vector<Eigen::Index> keep;
  for (std::size_t r = 0; r < rows(); ++r)
    if (stamps[r] >= from && stamps[r] < to) keep.push_back(static_cast<Eigen::Index>(r));
  Dataset out;
  out.x = x(keep, Eigen::all);
  out.y = y(keep);
  for (auto r : keep) {
    out.stamps.push_back(stamps[static_cast<std::size_t>(r)]);
    out.hours.push_back(hours[static_cast<std::size_t>(r)]);
  }
  out.names = names;
  out.fingerprint = fingerprint;
  return out;
}

}  // namespace costcast::forecast
