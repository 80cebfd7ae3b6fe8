#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "costcast/grid/network.hpp"
#include "costcast/opt/qp.hpp"

namespace costcast::testing {

/// Straight-line assembly of both dispatch problems with explicit angle and
/// energy variables, nodal balance rows and line limits on angle differences. It shares no assembly
/// code with the production dispatch module and serves as its oracle.
struct AngleFormResult {
  Eigen::MatrixXd p;            // generators x hours
  Eigen::VectorXd hourly_cost;  // generation (+ storage + slack) cost per hour
  double complementarity = 0.0; // max U+ * U- over units and hours (IPB only)
  bool optimal = false;
};

namespace detail {

struct AngleFormVars {
  std::vector<std::vector<int>> p, theta, up, down, energy;
  std::vector<int> shed, spill;
};

inline void add_network(opt::QpBuilder& b, const grid::Network& net, const grid::LoadProfile& load, int nh,
                        AngleFormVars& v, bool storage) {
  const double two_pi = 2.0 * std::numbers::pi;
  const int nl = static_cast<int>(net.lines().size());
  v.theta.assign(static_cast<std::size_t>(nh), {});
  for (int i = 0; i < nh; ++i) {
    auto& th = v.theta[static_cast<std::size_t>(i)];
    for (int k = 0; k < net.bus_count(); ++k)
      th.push_back(k == net.reference_bus() ? b.add_var(0.0, 0.0) : b.add_var(-two_pi, two_pi));
    for (int l = 0; l < nl; ++l) {
      const auto& line = net.lines()[static_cast<std::size_t>(l)];
      const double coef = net.mva_base() * line.susceptance;
      const opt::QpBuilder::Terms diff{{th[static_cast<std::size_t>(line.from_bus)], coef},
                                       {th[static_cast<std::size_t>(line.to_bus)], -coef}};
      b.add_le(diff, line.flow_limit);
      b.add_ge(diff, -line.flow_limit);
    }
    for (int k = 0; k < net.bus_count(); ++k) {
      opt::QpBuilder::Terms t;
      for (std::size_t j = 0; j < net.generators().size(); ++j)
        if (net.generators()[j].bus == k) t.emplace_back(v.p[static_cast<std::size_t>(i)][j], 1.0);
      if (storage) {
        for (std::size_t x = 0; x < net.bess_units().size(); ++x)
          if (net.bess_units()[x].bus == k) {
            t.emplace_back(v.up[static_cast<std::size_t>(i)][x], 1.0);
            t.emplace_back(v.down[static_cast<std::size_t>(i)][x], -1.0);
          }
        const double frac = net.load_fractions()[static_cast<std::size_t>(k)];
        if (frac > 0.0) {
          t.emplace_back(v.shed[static_cast<std::size_t>(i)], frac);
          t.emplace_back(v.spill[static_cast<std::size_t>(i)], -frac);
        }
      }
      // Net outflow through incident lines, written on angle differences.
      for (int l = 0; l < nl; ++l) {
        const auto& line = net.lines()[static_cast<std::size_t>(l)];
        const double coef = net.mva_base() * line.susceptance;
        const auto& th = v.theta[static_cast<std::size_t>(i)];
        const int sign = line.from_bus == k ? -1 : (line.to_bus == k ? 1 : 0);
        if (sign == 0) continue;
        t.emplace_back(th[static_cast<std::size_t>(line.from_bus)], sign * coef);
        t.emplace_back(th[static_cast<std::size_t>(line.to_bus)], -sign * coef);
      }
      b.add_eq(t, load.system_load[static_cast<std::size_t>(i)] * net.load_fractions()[static_cast<std::size_t>(k)]);
    }
  }
}

inline void add_ramps(opt::QpBuilder& b, const grid::Network& net, int nh, const AngleFormVars& v) {
  for (std::size_t j = 0; j < net.generators().size(); ++j) {
    const auto& g = net.generators()[j];
    b.add_le({{v.p[0][j], 1.0}}, g.p_initial + g.ramp_up);
    b.add_ge({{v.p[0][j], 1.0}}, g.p_initial - g.ramp_down);
    for (int i = 1; i < nh; ++i) {
      const auto cur = v.p[static_cast<std::size_t>(i)][j], prev = v.p[static_cast<std::size_t>(i - 1)][j];
      b.add_le({{cur, 1.0}, {prev, -1.0}}, g.ramp_up);
      b.add_ge({{cur, 1.0}, {prev, -1.0}}, -g.ramp_down);
    }
  }
}

inline double gen_cost(const grid::Network& net, const Eigen::VectorXd& x, const AngleFormVars& v, int i) {
  double c = 0.0;
  for (std::size_t j = 0; j < net.generators().size(); ++j) {
    const auto& g = net.generators()[j];
    const double pj = x(v.p[static_cast<std::size_t>(i)][j]);
    c += g.cost_a * pj * pj + g.cost_b * pj + g.cost_c;
  }
  return c;
}

}  // namespace detail

inline AngleFormResult angle_form_daed(const grid::Network& net, const grid::LoadProfile& load) {
  const int nh = static_cast<int>(load.hours());
  opt::QpBuilder b;
  detail::AngleFormVars v;
  v.p.assign(static_cast<std::size_t>(nh), {});
  for (int i = 0; i < nh; ++i)
    for (const auto& g : net.generators()) {
      v.p[static_cast<std::size_t>(i)].push_back(b.add_var(0.0, g.p_max, g.cost_b, 2.0 * g.cost_a));
      b.add_constant(g.cost_c);
    }
  detail::add_network(b, net, load, nh, v, false);
  detail::add_ramps(b, net, nh, v);
  const auto s = opt::solve_qp(b.build());
  AngleFormResult out;
  out.optimal = s.status == opt::Status::optimal;
  out.p.resize(static_cast<Eigen::Index>(net.generators().size()), nh);
  out.hourly_cost.resize(nh);
  for (int i = 0; i < nh; ++i) {
    for (std::size_t j = 0; j < net.generators().size(); ++j)
      out.p(static_cast<Eigen::Index>(j), i) = s.x(v.p[static_cast<std::size_t>(i)][j]);
    out.hourly_cost(i) = detail::gen_cost(net, s.x, v, i);
  }
  return out;
}

/// Intraday balance without binaries: with positive storage prices the
/// relaxation never charges and discharges one unit in the same hour, so a
/// zero `complementarity` certifies that the relaxed optimum is the binary one.
inline AngleFormResult angle_form_ipb(const grid::Network& net, const Eigen::MatrixXd& schedule,
                                      const grid::LoadProfile& actual, const Eigen::MatrixXd& reserve_down,
                                      const Eigen::MatrixXd& reserve_up, double voll) {
  const int nh = static_cast<int>(actual.hours());
  opt::QpBuilder b;
  detail::AngleFormVars v;
  v.p.assign(static_cast<std::size_t>(nh), {});
  v.up.assign(static_cast<std::size_t>(nh), {});
  v.down.assign(static_cast<std::size_t>(nh), {});
  v.energy.assign(static_cast<std::size_t>(nh), {});
  for (int i = 0; i < nh; ++i) {
    for (std::size_t j = 0; j < net.generators().size(); ++j) {
      const auto& g = net.generators()[j];
      const auto jj = static_cast<Eigen::Index>(j);
      v.p[static_cast<std::size_t>(i)].push_back(b.add_var(0.0, g.p_max, g.cost_b, 2.0 * g.cost_a));
      b.add_constant(g.cost_c);
      b.add_ge({{v.p[static_cast<std::size_t>(i)][j], 1.0}}, schedule(jj, i) - reserve_down(jj, i));
      b.add_le({{v.p[static_cast<std::size_t>(i)][j], 1.0}}, schedule(jj, i) + reserve_up(jj, i));
    }
    for (const auto& u : net.bess_units()) {
      v.up[static_cast<std::size_t>(i)].push_back(b.add_var(0.0, u.discharge_max, u.price_discharge));
      v.down[static_cast<std::size_t>(i)].push_back(b.add_var(0.0, u.charge_max, u.price_charge));
      v.energy[static_cast<std::size_t>(i)].push_back(b.add_var(0.0, u.energy_max));
    }
    v.shed.push_back(b.add_var(0.0, opt::kInf, voll));
    v.spill.push_back(b.add_var(0.0, opt::kInf, voll));
  }
  for (int i = 0; i < nh; ++i)
    for (std::size_t x = 0; x < net.bess_units().size(); ++x) {
      const auto ii = static_cast<std::size_t>(i);
      opt::QpBuilder::Terms t{{v.energy[ii][x], 1.0}, {v.up[ii][x], -1.0}, {v.down[ii][x], 1.0}};
      if (i > 0) t.emplace_back(v.energy[ii - 1][x], -1.0);
      b.add_eq(t, i == 0 ? net.bess_units()[x].energy_initial : 0.0);
    }
  detail::add_network(b, net, actual, nh, v, true);
  detail::add_ramps(b, net, nh, v);
  const auto s = opt::solve_qp(b.build());
  AngleFormResult out;
  out.optimal = s.status == opt::Status::optimal;
  out.p.resize(static_cast<Eigen::Index>(net.generators().size()), nh);
  out.hourly_cost.resize(nh);
  for (int i = 0; i < nh; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    double c = detail::gen_cost(net, s.x, v, i);
    for (std::size_t j = 0; j < net.generators().size(); ++j) out.p(static_cast<Eigen::Index>(j), i) = s.x(v.p[ii][j]);
    for (std::size_t x = 0; x < net.bess_units().size(); ++x) {
      const auto& u = net.bess_units()[x];
      const double up = s.x(v.up[ii][x]), down = s.x(v.down[ii][x]);
      c += u.price_discharge * up + u.price_charge * down;
      out.complementarity = std::max(out.complementarity, up * down);
    }
    c += voll * (s.x(v.shed[ii]) + s.x(v.spill[ii]));
    out.hourly_cost(i) = c;
  }
  return out;
}

}  // namespace costcast::testing
