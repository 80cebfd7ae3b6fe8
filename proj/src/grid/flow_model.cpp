#include "costcast/grid/flow_model.hpp"

namespace costcast::grid {

namespace {

// Maps bus k to its row in the reduced (reference-free) system, or -1.
inline int reduced_index(int k, int ref) { return k == ref ? -1 : (k < ref ? k : k - 1); }

}  // namespace

FlowModel::FlowModel(const Network& net)
    : reference_bus_(net.reference_bus()), mva_base_(net.mva_base()) {
  const int nb = net.bus_count();
  const int nl = static_cast<int>(net.lines().size());
  incidence_ = Eigen::MatrixXd::Zero(nl, nb);
  flow_angle_ = Eigen::MatrixXd::Zero(nl, nb);
  for (int l = 0; l < nl; ++l) {
    const auto& ln = net.lines()[static_cast<std::size_t>(l)];
    incidence_(l, ln.from_bus) = 1.0;
    incidence_(l, ln.to_bus) = -1.0;
    flow_angle_(l, ln.from_bus) = mva_base_ * ln.susceptance;
    flow_angle_(l, ln.to_bus) = -mva_base_ * ln.susceptance;
  }
  ptdf_ = Eigen::MatrixXd::Zero(nl, nb);
  angle_sens_ = Eigen::MatrixXd::Zero(nb, nb);
  if (nb == 1) return;

  // Reduced nodal susceptance matrix (MW per rad) without the reference bus.
  const Eigen::MatrixXd bbus = incidence_.transpose() * flow_angle_;
  Eigen::MatrixXd reduced(nb - 1, nb - 1);
  for (int r = 0; r < nb; ++r) {
    const int ri = reduced_index(r, reference_bus_);
    if (ri < 0) continue;
    for (int c = 0; c < nb; ++c) {
      const int ci = reduced_index(c, reference_bus_);
      if (ci >= 0) reduced(ri, ci) = bbus(r, c);
    }
  }
  reduced_lu_ = reduced.partialPivLu();

  // Column k of the PTDF is the flow pattern of 1 MW injected at k and
  // withdrawn at the reference bus.
  Eigen::MatrixXd inverse = reduced_lu_.inverse();
  for (int k = 0; k < nb; ++k) {
    const int ki = reduced_index(k, reference_bus_);
    if (ki < 0) continue;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(nb);
    for (int r = 0; r < nb; ++r) {
      const int ri = reduced_index(r, reference_bus_);
      if (ri >= 0) theta(r) = inverse(ri, ki);
    }
    angle_sens_.col(k) = theta;
    ptdf_.col(k) = flow_angle_ * theta;
  }
}

Eigen::VectorXd FlowModel::angles(const Eigen::VectorXd& injection) const {
  const int nb = bus_count();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(nb);
  if (nb == 1) return theta;
  Eigen::VectorXd rhs(nb - 1);
  for (int k = 0; k < nb; ++k) {
    const int ki = reduced_index(k, reference_bus_);
    if (ki >= 0) rhs(ki) = injection(k);
  }
  const Eigen::VectorXd sol = reduced_lu_.solve(rhs);
  for (int k = 0; k < nb; ++k) {
    const int ki = reduced_index(k, reference_bus_);
    if (ki >= 0) theta(k) = sol(ki);
  }
  return theta;
}

Eigen::VectorXd FlowModel::flows_from_angles(const Eigen::VectorXd& theta) const {
  return flow_angle_ * theta;
}

Eigen::VectorXd FlowModel::flows(const Eigen::VectorXd& injection) const {
  return flows_from_angles(angles(injection));
}

Eigen::VectorXd FlowModel::balance_residual(const Eigen::VectorXd& injection,
                                            const Eigen::VectorXd& f) const {
  return injection - incidence_.transpose() * f;
}

FlowModel ptdf_free_flow_model(const Network& net) { return FlowModel(net); }

}  // namespace costcast::grid
