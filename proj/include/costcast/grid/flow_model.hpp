#pragma once

#include <Eigen/Dense>

#include "costcast/grid/network.hpp"

namespace costcast::grid {

/// DC power-flow relations of a network: line flow f = base * B * A * delta_angle
/// and nodal balance injection_k = sum_l A(l,k) f_l. Immutable after construction.
class FlowModel {
 public:
  explicit FlowModel(const Network& net);

  int bus_count() const { return static_cast<int>(incidence_.cols()); }
  int line_count() const { return static_cast<int>(incidence_.rows()); }
  int reference_bus() const { return reference_bus_; }

  /// A(l,k): +1 at the from bus, -1 at the to bus.
  const Eigen::MatrixXd& incidence() const { return incidence_; }
  /// Flow-angle block: f = flow_angle * delta_angle (MW per rad).
  const Eigen::MatrixXd& flow_angle() const { return flow_angle_; }
  /// Injection-to-flow sensitivities with the reference bus as slack (MW per MW).
  const Eigen::MatrixXd& ptdf() const { return ptdf_; }
  /// Injection-to-angle sensitivities (rad per MW); the reference row is zero.
  const Eigen::MatrixXd& angle_sensitivity() const { return angle_sens_; }

  /// Angles for a balanced injection vector (MW); reference angle is exactly 0.
  Eigen::VectorXd angles(const Eigen::VectorXd& injection) const;
  Eigen::VectorXd flows_from_angles(const Eigen::VectorXd& angles) const;
  Eigen::VectorXd flows(const Eigen::VectorXd& injection) const;

  /// injection_k - sum_l A(l,k) f_l for every bus.
  Eigen::VectorXd balance_residual(const Eigen::VectorXd& injection,
                                   const Eigen::VectorXd& flows) const;

 private:
  int reference_bus_;
  double mva_base_;
  Eigen::MatrixXd incidence_;
  Eigen::MatrixXd flow_angle_;
  Eigen::MatrixXd ptdf_;
  Eigen::MatrixXd angle_sens_;
  Eigen::PartialPivLU<Eigen::MatrixXd> reduced_lu_;
};

FlowModel ptdf_free_flow_model(const Network& net);

}  // namespace costcast::grid
