#pragma once

#include <string>

#include <Eigen/Dense>

#include "costcast/grid/flow_model.hpp"
#include "costcast/grid/network.hpp"

namespace costcast::dispatch {

/// Per-unit, per-hour reserve band around the day-ahead schedule (MW).
struct ReserveConfig {
  Eigen::MatrixXd down;  // generators x hours
  Eigen::MatrixXd up;

  /// RD = RU = fraction * p_max for every hour.
  static ReserveConfig fraction_of_capacity(const grid::Network& net, std::size_t hours, double fraction = 0.2);
  void validate(const grid::Network& net, std::size_t hours) const;
  /// Aggregate up-balancing capability: sum of RU plus BESS discharge, per hour.
  Eigen::VectorXd aggregate_up(const grid::Network& net) const;
  Eigen::VectorXd aggregate_down(const grid::Network& net) const;
};

struct DispatchOptions {
  double tol = 1e-8;
  /// Value of lost load for the shedding / spilling slacks; <= 0 selects
  /// 10x the largest balancing price of the network.
  double voll = 0.0;
  int max_binary_pairs = 96;
};

double effective_voll(const grid::Network& net, const DispatchOptions& opts);

struct DaedSolution {
  Eigen::MatrixXd p;       // generators x hours, MW
  Eigen::MatrixXd flows;   // lines x hours, MW
  Eigen::MatrixXd angles;  // buses x hours, rad
  Eigen::VectorXd hourly_cost;
  double total_cost = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

struct IpbSolution {
  Eigen::MatrixXd p_adjusted;  // generators x hours
  Eigen::MatrixXd discharge;   // BESS x hours (U+)
  Eigen::MatrixXd charge;      // BESS x hours (U-)
  Eigen::MatrixXd v_plus;
  Eigen::MatrixXd v_minus;
  Eigen::MatrixXd energy;      // BESS x hours, state after each hour
  Eigen::VectorXd shed;        // MW of unserved load per hour
  Eigen::VectorXd spill;       // MW of surplus generation per hour
  Eigen::MatrixXd flows;
  Eigen::MatrixXd angles;
  Eigen::VectorXd hourly_cost;
  double total_cost = 0.0;
  double kkt_residual = 0.0;
  bool shed_flag = false;
  int nodes = 0;
  int iterations = 0;
};

/// Day-ahead economic dispatch. Throws InfeasibleError naming the binding hour.
DaedSolution solve_daed(const grid::Network& net, const grid::LoadProfile& loads, const DispatchOptions& opts = {});

/// Intraday re-dispatch of a day-ahead schedule against actual loads.
IpbSolution solve_ipb(const grid::Network& net, const DaedSolution& daed, const grid::LoadProfile& actual,
                      const ReserveConfig& rc, const DispatchOptions& opts = {});

struct FepcProfile {
  Eigen::VectorXd fepc;         // percent, per hour
  Eigen::VectorXd ideal_cost;   // hourly slices of the DAED on actual loads
  Eigen::VectorXd actual_cost;  // hourly slices of the IPB on the forecast schedule
  bool shed_flag = false;
};

/// FEPC for every hour. `ideal` may carry a precomputed DAED on the actual loads.
FepcProfile fepc_profile(const grid::Network& net, const ReserveConfig& rc, const grid::LoadProfile& forecast,
                         const grid::LoadProfile& actual, const DispatchOptions& opts = {},
                         const DaedSolution* ideal = nullptr);

double fepc(const grid::Network& net, const ReserveConfig& rc, const grid::LoadProfile& forecast,
            const grid::LoadProfile& actual, std::size_t hour, const DispatchOptions& opts = {});

/// `hour,generator,p_mw`
std::string daed_to_csv(const grid::Network& net, const DaedSolution& sol);
/// `hour,generator,p_mw` for the adjusted schedule.
std::string ipb_generation_csv(const grid::Network& net, const IpbSolution& sol);
/// `hour,bess,discharge_mw,charge_mw,energy_mwh`
std::string ipb_storage_csv(const grid::Network& net, const IpbSolution& sol);

}  // namespace costcast::dispatch
