#include "costcast/metrics/metrics.hpp"

#include <cmath>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/common/parallel.hpp"

namespace costcast::metrics {

namespace {

void check_pair(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) {
  if (y.size() == 0) throw ValidationError("metrics: empty input");
  if (yhat.size() != y.size()) throw ValidationError("metrics: forecasts and actuals differ in length");
}

DayCost evaluate_day(const grid::Network& net, const dispatch::ReserveConfig& rc, const DayPair& d,
                     const dispatch::DispatchOptions& opts) {
  DayCost c;
  try {
    const auto p = dispatch::fepc_profile(net, rc, d.forecast, d.actual, opts);
    c.fepc = p.fepc;
    c.shed = p.shed_flag;
  } catch (const InfeasibleError&) {
    c.infeasible = true;
  }
  return c;
}

}  // namespace

double mape(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) {
  check_pair(yhat, y);
  if ((y.array() <= 0.0).any()) throw ValidationError("metrics: actual loads must be positive");
  return ((yhat - y).array() / y.array()).abs().mean() * 100.0;
}

SignShares ofp_ufp(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) {
  check_pair(yhat, y);
  const Eigen::ArrayXd e = (yhat - y).array();
  const double n = static_cast<double>(e.size());
  SignShares s;
  s.ofp = (e > 0.0).count() / n * 100.0;
  s.ufp = (e < 0.0).count() / n * 100.0;
  s.zero = (e == 0.0).count() / n * 100.0;
  return s;
}

std::vector<DayCost> evaluate_days(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                   const std::vector<DayPair>& days, const dispatch::DispatchOptions& opts,
                                   int jobs) {
  std::vector<DayCost> out(days.size());
  parallel::for_each_index(days.size(), jobs, [&](std::size_t i) { out[i] = evaluate_day(net, rc, days[i], opts); });
  return out;
}

std::vector<DayCost> evaluate_days_serial(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                          const std::vector<DayPair>& days,
                                          const dispatch::DispatchOptions& opts) {
  std::vector<DayCost> out(days.size());
  parallel::for_each_index_serial(days.size(), [&](std::size_t i) { out[i] = evaluate_day(net, rc, days[i], opts); });
  return out;
}

double mfepc(const std::vector<DayCost>& days, std::size_t hour, int* excluded) {
  double sum = 0.0;
  int used = 0, skipped = 0;
  for (const auto& d : days) {
    if (!d.usable()) {
      ++skipped;
      continue;
    }
    if (hour >= static_cast<std::size_t>(d.fepc.size()))
      throw ValidationError("metrics: hour " + std::to_string(hour + 1) + " outside the day profile");
    sum += d.fepc(static_cast<Eigen::Index>(hour));
    ++used;
  }
  if (excluded) *excluded = skipped;
  if (used == 0) throw ValidationError("metrics: no usable day for MFEPC");
  return sum / used;
}

double mfepc(const grid::Network& net, const dispatch::ReserveConfig& rc, const std::vector<DayPair>& days,
             std::size_t hour, const dispatch::DispatchOptions& opts) {
  return mfepc(evaluate_days(net, rc, days, opts), hour);
}

std::string EvaluationReport::to_csv() const {
  csv::Writer w({"hour", "mfepc", "mape", "ofp", "ufp", "n"});
  auto emit = [&](const std::string& label, const HourMetrics& m) {
    w.row({label, csv::format_double(m.mfepc), csv::format_double(m.mape), csv::format_double(m.ofp),
           csv::format_double(m.ufp), std::to_string(m.n)});
  };
  for (std::size_t h = 0; h < hours.size(); ++h) emit(std::to_string(h + 1), hours[h]);
  emit("average", average);
  return w.str();
}

EvaluationReport build_report(const std::vector<DayPair>& days, const std::vector<DayCost>& costs) {
  if (days.empty() || days.size() != costs.size())
    throw ValidationError("metrics: report needs one cost entry per day and at least one day");
  const std::size_t hours = days.front().actual.hours();
  EvaluationReport r;
  r.days = static_cast<int>(days.size());
  r.hours.resize(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    Eigen::VectorXd yhat(static_cast<Eigen::Index>(days.size())), y(static_cast<Eigen::Index>(days.size()));
    for (std::size_t d = 0; d < days.size(); ++d) {
      if (days[d].actual.hours() != hours || days[d].forecast.hours() != hours)
        throw ValidationError("metrics: every day needs the same number of hours");
      yhat(static_cast<Eigen::Index>(d)) = days[d].forecast.system_load[h];
      y(static_cast<Eigen::Index>(d)) = days[d].actual.system_load[h];
    }
    auto& m = r.hours[h];
    m.mfepc = mfepc(costs, h, &r.excluded_days);
    m.mape = mape(yhat, y);
    const auto s = ofp_ufp(yhat, y);
    m.ofp = s.ofp;
    m.ufp = s.ufp;
    m.zero = s.zero;
    m.n = static_cast<int>(days.size());
  }
  for (const auto& m : r.hours) {
    r.average.mfepc += m.mfepc / static_cast<double>(hours);
    r.average.mape += m.mape / static_cast<double>(hours);
    r.average.ofp += m.ofp / static_cast<double>(hours);
    r.average.ufp += m.ufp / static_cast<double>(hours);
    r.average.zero += m.zero / static_cast<double>(hours);
    r.average.n += m.n;
  }
  return r;
}

}  // namespace costcast::metrics
