#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "costcast/dispatch/dispatch.hpp"
#include "costcast/grid/network.hpp"

namespace costcast::metrics {

/// Mean |yhat - y| / y in percent. Throws ValidationError on empty or
/// mismatched input or a non-positive actual.
double mape(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y);

/// Shares (percent) of strictly positive, strictly negative and exactly zero errors.
struct SignShares {
  double ofp = 0.0;
  double ufp = 0.0;
  double zero = 0.0;
};
SignShares ofp_ufp(const Eigen::VectorXd& yhat, const Eigen::VectorXd& y);

/// Dispatch outcome of one forecast/actual day.
struct DayCost {
  Eigen::VectorXd fepc;  // percent per hour; empty when infeasible
  bool shed = false;
  bool infeasible = false;
  bool usable() const { return !shed && !infeasible; }
};

struct DayPair {
  grid::LoadProfile forecast;
  grid::LoadProfile actual;
};

/// Dispatch-evaluated FEPC for every day across `jobs` threads (0 = all).
/// Output order follows the input for any thread count.
std::vector<DayCost> evaluate_days(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                   const std::vector<DayPair>& days, const dispatch::DispatchOptions& opts = {},
                                   int jobs = 0);
/// Single-threaded reference of evaluate_days.
std::vector<DayCost> evaluate_days_serial(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                          const std::vector<DayPair>& days,
                                          const dispatch::DispatchOptions& opts = {});

/// Mean FEPC at `hour` over usable days; `excluded` receives the number of
/// shed or infeasible days. Throws ValidationError if no day is usable.
double mfepc(const std::vector<DayCost>& days, std::size_t hour, int* excluded = nullptr);

/// Convenience form: dispatches the days and averages hour `hour`.
double mfepc(const grid::Network& net, const dispatch::ReserveConfig& rc, const std::vector<DayPair>& days,
             std::size_t hour, const dispatch::DispatchOptions& opts = {});

struct HourMetrics {
  double mfepc = 0.0, mape = 0.0, ofp = 0.0, ufp = 0.0, zero = 0.0;
  int n = 0;
};

struct EvaluationReport {
  std::vector<HourMetrics> hours;  // 24 entries
  HourMetrics average;             // mean of the hourly columns; n = total samples
  int days = 0;
  int excluded_days = 0;

  /// `hour,mfepc,mape,ofp,ufp,n` for hours 1..24, then one `average` row.
  std::string to_csv() const;
};

/// Per-hour report; `costs` is aligned with `days`.
EvaluationReport build_report(const std::vector<DayPair>& days, const std::vector<DayCost>& costs);

}  // namespace costcast::metrics
