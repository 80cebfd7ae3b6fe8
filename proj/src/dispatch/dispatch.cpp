#include "costcast/dispatch/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/opt/qp.hpp"

namespace costcast::dispatch {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Terms = opt::QpBuilder::Terms;

namespace {

constexpr double kAngleLimit = 2.0 * std::numbers::pi;

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

// Adds lo <= sum(terms) + constant <= hi, skipping sides the variable bounds
// already guarantee. Returns the number of rows added.
int add_bounded_expression(opt::QpBuilder& b, const Terms& terms, double constant, double lo, double hi,
                           const std::vector<double>& var_lo, const std::vector<double>& var_hi,
                           std::vector<int>* row_hours, int hour) {
  double maxv = constant, minv = constant;
  for (const auto& [j, c] : terms) {
    const double l = var_lo[static_cast<std::size_t>(j)], h = var_hi[static_cast<std::size_t>(j)];
    maxv += c > 0 ? c * h : c * l;
    minv += c > 0 ? c * l : c * h;
  }
  int added = 0;
  if (maxv > hi) {
    b.add_le(terms, hi - constant);
    if (row_hours) row_hours->push_back(hour);
    ++added;
  }
  if (minv < lo) {
    b.add_ge(terms, lo - constant);
    if (row_hours) row_hours->push_back(hour);
    ++added;
  }
  return added;
}

// Network rows shared by both problems: line limits and angle bounds written
// on nodal injections through the flow model's sensitivities.
void add_network_rows(opt::QpBuilder& b, const grid::Network& net, const grid::FlowModel& fm,
                      const std::vector<Terms>& bus_terms, const VectorXd& bus_constant,
                      const std::vector<double>& var_lo, const std::vector<double>& var_hi,
                      std::vector<int>* row_hours, int hour) {
  const int nb = net.bus_count();
  auto assemble = [&](const Eigen::Ref<const Eigen::RowVectorXd>& sens, Terms& terms, double& constant) {
    terms.clear();
    constant = 0.0;
    for (int k = 0; k < nb; ++k) {
      const double s = sens(k);
      if (s == 0.0) continue;
      for (const auto& [j, c] : bus_terms[static_cast<std::size_t>(k)]) terms.emplace_back(j, s * c);
      constant += s * bus_constant(k);
    }
  };
  Terms terms;
  double constant = 0.0;
  for (Index l = 0; l < fm.ptdf().rows(); ++l) {
    assemble(fm.ptdf().row(l), terms, constant);
    const double lim = net.lines()[sz(l)].flow_limit;
    add_bounded_expression(b, terms, constant, -lim, lim, var_lo, var_hi, row_hours, hour);
  }
  for (Index k = 0; k < fm.angle_sensitivity().rows(); ++k) {
    if (k == net.reference_bus()) continue;
    assemble(fm.angle_sensitivity().row(k), terms, constant);
    add_bounded_expression(b, terms, constant, -kAngleLimit, kAngleLimit, var_lo, var_hi, row_hours, hour);
  }
}

void recover_network(const grid::FlowModel& fm, const MatrixXd& injection, MatrixXd& angles, MatrixXd& flows) {
  angles.resize(fm.bus_count(), injection.cols());
  flows.resize(fm.line_count(), injection.cols());
  for (Index i = 0; i < injection.cols(); ++i) {
    angles.col(i) = fm.angles(injection.col(i));
    flows.col(i) = fm.flows_from_angles(angles.col(i));
  }
}

int binding_hour(const opt::QuadraticProgram& qp, const VectorXd& x, const std::vector<int>& eq_hours,
                 const std::vector<int>& in_hours) {
  int hour = -1;
  double worst = 0.0;
  if (qp.a_eq.rows() > 0) {
    const VectorXd r = (qp.a_eq * x - qp.b_eq).cwiseAbs();
    for (Index i = 0; i < r.size(); ++i)
      if (r(i) > worst) {
        worst = r(i);
        hour = eq_hours[sz(i)];
      }
  }
  if (qp.a_in.rows() > 0) {
    const VectorXd r = qp.a_in * x - qp.b_in;
    for (Index i = 0; i < r.size(); ++i)
      if (r(i) > worst) {
        worst = r(i);
        hour = in_hours[sz(i)];
      }
  }
  return hour;
}

double generation_cost(const grid::Network& net, const MatrixXd& p, Index hour) {
  double c = 0.0;
  for (std::size_t j = 0; j < net.generators().size(); ++j) c += net.generators()[j].cost(p(static_cast<Index>(j), hour));
  return c;
}

// Dispatch also accepts an all-zero profile, which the LoadProfile constructor rejects.
void check_loads(const grid::LoadProfile& loads, const char* what) {
  if (loads.hours() == 0) throw ValidationError(std::string(what) + ": load profile is empty");
  for (std::size_t i = 0; i < loads.hours(); ++i)
    if (!(loads.system_load[i] >= 0.0) || !std::isfinite(loads.system_load[i]))
      throw ValidationError(std::string(what) + ": system_load[" + std::to_string(i) + "] must be non-negative");
}

}  // namespace

ReserveConfig ReserveConfig::fraction_of_capacity(const grid::Network& net, std::size_t hours, double fraction) {
  if (!(fraction >= 0.0)) throw ValidationError("reserve fraction must be non-negative");
  const auto nj = static_cast<Index>(net.generators().size());
  ReserveConfig rc;
  rc.down.resize(nj, static_cast<Index>(hours));
  for (Index j = 0; j < nj; ++j) rc.down.row(j).setConstant(fraction * net.generators()[sz(j)].p_max);
  rc.up = rc.down;
  return rc;
}

void ReserveConfig::validate(const grid::Network& net, std::size_t hours) const {
  const auto nj = static_cast<Index>(net.generators().size());
  if (down.rows() != nj || up.rows() != nj || down.cols() != static_cast<Index>(hours) ||
      up.cols() != static_cast<Index>(hours))
    throw ValidationError("reserve: expected a generators x hours matrix for reserve_down and reserve_up");
  if (!down.allFinite() || !up.allFinite() || (down.array() < 0.0).any() || (up.array() < 0.0).any())
    throw ValidationError("reserve: entries must be finite and non-negative");
}

VectorXd ReserveConfig::aggregate_up(const grid::Network& net) const {
  double bess = 0.0;
  for (const auto& b : net.bess_units()) bess += b.discharge_max;
  return (up.colwise().sum().transpose().array() + bess).matrix();
}

VectorXd ReserveConfig::aggregate_down(const grid::Network& net) const {
  double bess = 0.0;
  for (const auto& b : net.bess_units()) bess += b.charge_max;
  return (down.colwise().sum().transpose().array() + bess).matrix();
}

double effective_voll(const grid::Network& net, const DispatchOptions& opts) {
  if (opts.voll > 0.0) return opts.voll;
  double price = net.max_balancing_price();
  if (price <= 0.0) {
    for (const auto& g : net.generators()) price = std::max(price, g.marginal_cost(g.p_max));
  }
  return 10.0 * std::max(price, 1.0);
}

DaedSolution solve_daed(const grid::Network& net, const grid::LoadProfile& loads, const DispatchOptions& opts) {
  const auto& gens = net.generators();
  const int nj = static_cast<int>(gens.size());
  check_loads(loads, "day-ahead dispatch");
  const int nh = static_cast<int>(loads.hours());
  const grid::FlowModel fm(net);

  opt::QpBuilder b;
  std::vector<double> vlo, vhi;
  std::vector<int> eq_hours, in_hours;
  auto var = [&](int j, int i) { return i * nj + j; };
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nj; ++j) {
      const auto& g = gens[static_cast<std::size_t>(j)];
      double lo = 0.0, hi = g.p_max;
      if (i == 0) {
        lo = std::max(lo, g.p_initial - g.ramp_down);
        hi = std::min(hi, g.p_initial + g.ramp_up);
      }
      b.add_var(lo, hi, g.cost_b, 2.0 * g.cost_a);
      b.add_constant(g.cost_c);
      vlo.push_back(lo);
      vhi.push_back(hi);
    }
  // Gross capacity shortfalls are reported directly; the elastic solve is slow on them.
  for (int i = 0; i < nh; ++i) {
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < nj; ++j) {
      lo += vlo[static_cast<std::size_t>(var(j, i))];
      hi += vhi[static_cast<std::size_t>(var(j, i))];
    }
    const double load = loads.system_load[static_cast<std::size_t>(i)];
    if (load > hi * (1.0 + 1e-12) || load < lo * (1.0 - 1e-12))
      throw InfeasibleError("day-ahead dispatch is infeasible: hour " + std::to_string(i + 1) + " load " +
                                csv::format_double(load) + " MW lies outside the available generation range [" +
                                csv::format_double(lo) + ", " + csv::format_double(hi) + "] MW",
                            i);
  }
  for (int i = 0; i < nh; ++i) {
    Terms bal;
    for (int j = 0; j < nj; ++j) bal.emplace_back(var(j, i), 1.0);
    b.add_eq(bal, loads.system_load[static_cast<std::size_t>(i)]);
    eq_hours.push_back(i);
  }
  for (int i = 1; i < nh; ++i)
    for (int j = 0; j < nj; ++j) {
      const auto& g = gens[static_cast<std::size_t>(j)];
      add_bounded_expression(b, {{var(j, i), 1.0}, {var(j, i - 1), -1.0}}, 0.0, -g.ramp_down, g.ramp_up, vlo, vhi,
                             &in_hours, i);
    }
  for (int i = 0; i < nh; ++i) {
    std::vector<Terms> bus_terms(static_cast<std::size_t>(net.bus_count()));
    VectorXd bus_const(net.bus_count());
    for (int k = 0; k < net.bus_count(); ++k) {
      bus_const(k) = -loads.per_bus(net, k, static_cast<std::size_t>(i));
      for (int j : net.gen_bus_map()[static_cast<std::size_t>(k)]) bus_terms[static_cast<std::size_t>(k)].emplace_back(var(j, i), 1.0);
    }
    add_network_rows(b, net, fm, bus_terms, bus_const, vlo, vhi, &in_hours, i);
  }
  const auto qp = b.build();

  // Start from a capacity-proportional split of each hour's load.
  VectorXd x0(qp.n());
  const double cap = net.total_capacity();
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nj; ++j)
      x0(var(j, i)) = loads.system_load[static_cast<std::size_t>(i)] * gens[static_cast<std::size_t>(j)].p_max / cap;
  opt::SolveOptions so;
  so.tol = opts.tol;
  so.x0 = &x0;
  const auto s = opt::solve_qp(qp, so);
  if (s.status == opt::Status::infeasible) {
    const int hour = binding_hour(qp, s.x, eq_hours, in_hours);
    throw InfeasibleError("day-ahead dispatch is infeasible (load cannot be served within capacity, ramp and "
                          "network limits); binding hour " + std::to_string(hour + 1),
                          hour);
  }
  if (s.status != opt::Status::optimal)
    throw std::runtime_error("day-ahead dispatch: solver stopped with status " + opt::to_string(s.status));

  DaedSolution out;
  out.p.resize(nj, nh);
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nj; ++j) out.p(j, i) = s.x(var(j, i));
  MatrixXd inj = MatrixXd::Zero(net.bus_count(), nh);
  for (int i = 0; i < nh; ++i) {
    for (int k = 0; k < net.bus_count(); ++k) inj(k, i) = -loads.per_bus(net, k, static_cast<std::size_t>(i));
    for (int j = 0; j < nj; ++j) inj(gens[static_cast<std::size_t>(j)].bus, i) += out.p(j, i);
  }
  recover_network(fm, inj, out.angles, out.flows);
  out.hourly_cost.resize(nh);
  out.total_cost = 0.0;
  for (int i = 0; i < nh; ++i) {
    out.hourly_cost(i) = generation_cost(net, out.p, i);
    out.total_cost += out.hourly_cost(i);
  }
  out.kkt_residual = s.kkt_residual;
  out.iterations = s.iterations;
  return out;
}

IpbSolution solve_ipb(const grid::Network& net, const DaedSolution& daed, const grid::LoadProfile& actual,
                      const ReserveConfig& rc, const DispatchOptions& opts) {
  const auto& gens = net.generators();
  const auto& bess = net.bess_units();
  const int nj = static_cast<int>(gens.size());
  const int nx = static_cast<int>(bess.size());
  const int nh = static_cast<int>(actual.hours());
  if (daed.p.rows() != nj || daed.p.cols() != nh)
    throw ValidationError("intraday balance: day-ahead schedule does not match the network and horizon");
  check_loads(actual, "intraday balance");
  rc.validate(net, actual.hours());
  const grid::FlowModel fm(net);
  const double voll = effective_voll(net, opts);

  // Variable layout per hour: p~ (J), then per BESS U+, U-, v+, v-, then shed, spill.
  const int per_hour = nj + 4 * nx + 2;
  auto vp = [&](int j, int i) { return i * per_hour + j; };
  auto vu = [&](int x, int i) { return i * per_hour + nj + 4 * x; };
  auto vd = [&](int x, int i) { return vu(x, i) + 1; };
  auto vbp = [&](int x, int i) { return vu(x, i) + 2; };
  auto vbm = [&](int x, int i) { return vu(x, i) + 3; };
  auto vshed = [&](int i) { return i * per_hour + nj + 4 * nx; };
  auto vspill = [&](int i) { return vshed(i) + 1; };

  opt::QpBuilder b;
  std::vector<double> vlo, vhi;
  std::vector<int> eq_hours, in_hours;
  auto add = [&](double lo, double hi, double lin, double quad) {
    b.add_var(lo, hi, lin, quad);
    vlo.push_back(lo);
    vhi.push_back(hi);
  };
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < nj; ++j) {
      const auto& g = gens[static_cast<std::size_t>(j)];
      const double p = daed.p(j, i);
      double lo = std::max(0.0, p - rc.down(j, i));
      double hi = std::min(g.p_max, p + rc.up(j, i));
      if (i == 0) {
        lo = std::max(lo, g.p_initial - g.ramp_down);
        hi = std::min(hi, g.p_initial + g.ramp_up);
      }
      add(lo, hi, g.cost_b, 2.0 * g.cost_a);
      b.add_constant(g.cost_c);
    }
    for (int x = 0; x < nx; ++x) {
      const auto& u = bess[static_cast<std::size_t>(x)];
      add(0.0, u.discharge_max, u.price_discharge, 0.0);
      add(0.0, u.charge_max, u.price_charge, 0.0);
      add(0.0, 1.0, 0.0, 0.0);
      add(0.0, 1.0, 0.0, 0.0);
    }
    add(0.0, opt::kInf, voll, 0.0);
    add(0.0, opt::kInf, voll, 0.0);
  }

  for (int i = 0; i < nh; ++i) {
    Terms bal;
    for (int j = 0; j < nj; ++j) bal.emplace_back(vp(j, i), 1.0);
    for (int x = 0; x < nx; ++x) {
      bal.emplace_back(vu(x, i), 1.0);
      bal.emplace_back(vd(x, i), -1.0);
    }
    bal.emplace_back(vshed(i), 1.0);
    bal.emplace_back(vspill(i), -1.0);
    b.add_eq(bal, actual.system_load[static_cast<std::size_t>(i)]);
    eq_hours.push_back(i);
  }
  for (int i = 0; i < nh; ++i)
    for (int x = 0; x < nx; ++x) {
      const auto& u = bess[static_cast<std::size_t>(x)];
      b.add_le({{vu(x, i), 1.0}, {vbp(x, i), -u.discharge_max}}, 0.0);
      b.add_le({{vd(x, i), 1.0}, {vbm(x, i), -u.charge_max}}, 0.0);
      in_hours.push_back(i);
      in_hours.push_back(i);
    }
  // Energy state e_i = E_ini + sum_{t<=i} (U+ - U-) kept within [0, e_max].
  for (int x = 0; x < nx; ++x) {
    const auto& u = bess[static_cast<std::size_t>(x)];
    Terms cum;
    for (int i = 0; i < nh; ++i) {
      cum.emplace_back(vu(x, i), 1.0);
      cum.emplace_back(vd(x, i), -1.0);
      add_bounded_expression(b, cum, u.energy_initial, 0.0, u.energy_max, vlo, vhi, &in_hours, i);
    }
  }
  for (int i = 1; i < nh; ++i)
    for (int j = 0; j < nj; ++j) {
      const auto& g = gens[static_cast<std::size_t>(j)];
      add_bounded_expression(b, {{vp(j, i), 1.0}, {vp(j, i - 1), -1.0}}, 0.0, -g.ramp_down, g.ramp_up, vlo, vhi,
                             &in_hours, i);
    }
  for (int i = 0; i < nh; ++i) {
    std::vector<Terms> bus_terms(static_cast<std::size_t>(net.bus_count()));
    VectorXd bus_const(net.bus_count());
    for (int k = 0; k < net.bus_count(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double frac = net.load_fractions()[kk];
      bus_const(k) = -actual.per_bus(net, k, static_cast<std::size_t>(i));
      for (int j : net.gen_bus_map()[kk]) bus_terms[kk].emplace_back(vp(j, i), 1.0);
      for (int x : net.bess_bus_map()[kk]) {
        bus_terms[kk].emplace_back(vu(x, i), 1.0);
        bus_terms[kk].emplace_back(vd(x, i), -1.0);
      }
      if (frac > 0.0) {
        bus_terms[kk].emplace_back(vshed(i), frac);
        bus_terms[kk].emplace_back(vspill(i), -frac);
      }
    }
    add_network_rows(b, net, fm, bus_terms, bus_const, vlo, vhi, &in_hours, i);
  }

  opt::MixedBinaryQp mb;
  mb.base = b.build();
  for (int i = 0; i < nh; ++i)
    for (int x = 0; x < nx; ++x) mb.binary_pairs.emplace_back(vbp(x, i), vbm(x, i));

  // Start on the day-ahead schedule with the whole deviation on the slacks.
  VectorXd x0 = VectorXd::Zero(mb.base.n());
  for (int i = 0; i < nh; ++i) {
    double gen = 0.0;
    for (int j = 0; j < nj; ++j) {
      x0(vp(j, i)) = std::clamp(daed.p(j, i), mb.base.lo(vp(j, i)), mb.base.hi(vp(j, i)));
      gen += x0(vp(j, i));
    }
    for (int x = 0; x < nx; ++x) x0(vbm(x, i)) = 1.0;
    const double gap = actual.system_load[static_cast<std::size_t>(i)] - gen;
    x0(vshed(i)) = std::max(0.0, gap);
    x0(vspill(i)) = std::max(0.0, -gap);
  }
  opt::MixedBinaryOptions mo;
  mo.tol = opts.tol;
  mo.max_pairs = opts.max_binary_pairs;
  mo.x0 = &x0;
  const auto s = opt::solve_mixed_binary(mb, mo);
  if (s.status == opt::Status::infeasible)
    throw InfeasibleError("intraday balance is infeasible even with load shedding; check network limits", -1);
  if (s.status != opt::Status::optimal)
    throw std::runtime_error("intraday balance: solver stopped with status " + opt::to_string(s.status));

  IpbSolution out;
  out.p_adjusted.resize(nj, nh);
  out.discharge.resize(nx, nh);
  out.charge.resize(nx, nh);
  out.v_plus.resize(nx, nh);
  out.v_minus.resize(nx, nh);
  out.energy.resize(nx, nh);
  out.shed.resize(nh);
  out.spill.resize(nh);
  out.hourly_cost.resize(nh);
  MatrixXd inj = MatrixXd::Zero(net.bus_count(), nh);
  for (int i = 0; i < nh; ++i) {
    for (int j = 0; j < nj; ++j) out.p_adjusted(j, i) = s.x(vp(j, i));
    for (int x = 0; x < nx; ++x) {
      out.discharge(x, i) = s.x(vu(x, i));
      out.charge(x, i) = s.x(vd(x, i));
      out.v_plus(x, i) = s.x(vbp(x, i));
      out.v_minus(x, i) = s.x(vbm(x, i));
      const double prev = i == 0 ? bess[static_cast<std::size_t>(x)].energy_initial : out.energy(x, i - 1);
      out.energy(x, i) = prev + out.discharge(x, i) - out.charge(x, i);
    }
    out.shed(i) = s.x(vshed(i));
    out.spill(i) = s.x(vspill(i));

    double cost = generation_cost(net, out.p_adjusted, i);
    for (int x = 0; x < nx; ++x) {
      const auto& u = bess[static_cast<std::size_t>(x)];
      cost += u.price_discharge * out.discharge(x, i) + u.price_charge * out.charge(x, i);
    }
    cost += voll * (out.shed(i) + out.spill(i));
    out.hourly_cost(i) = cost;

    for (int k = 0; k < net.bus_count(); ++k) {
      const double frac = net.load_fractions()[static_cast<std::size_t>(k)];
      inj(k, i) = -actual.per_bus(net, k, static_cast<std::size_t>(i)) + frac * (out.shed(i) - out.spill(i));
    }
    for (int j = 0; j < nj; ++j) inj(gens[static_cast<std::size_t>(j)].bus, i) += out.p_adjusted(j, i);
    for (int x = 0; x < nx; ++x) inj(bess[static_cast<std::size_t>(x)].bus, i) += out.discharge(x, i) - out.charge(x, i);
  }
  out.total_cost = 0.0;
  for (int i = 0; i < nh; ++i) out.total_cost += out.hourly_cost(i);
  recover_network(fm, inj, out.angles, out.flows);
  out.shed_flag = (out.shed.array() > 1e-6).any() || (out.spill.array() > 1e-6).any();
  out.kkt_residual = s.kkt_residual;
  out.nodes = s.nodes;
  out.iterations = s.iterations;
  return out;
}

FepcProfile fepc_profile(const grid::Network& net, const ReserveConfig& rc, const grid::LoadProfile& forecast,
                         const grid::LoadProfile& actual, const DispatchOptions& opts, const DaedSolution* ideal) {
  if (forecast.hours() != actual.hours()) throw ValidationError("fepc: forecast and actual horizons differ");
  DaedSolution ideal_local;
  if (!ideal) {
    ideal_local = solve_daed(net, actual, opts);
    ideal = &ideal_local;
  }
  const DaedSolution schedule = solve_daed(net, forecast, opts);
  const IpbSolution ipb = solve_ipb(net, schedule, actual, rc, opts);
  FepcProfile out;
  out.ideal_cost = ideal->hourly_cost;
  out.actual_cost = ipb.hourly_cost;
  out.fepc = ((out.actual_cost - out.ideal_cost).array() / out.ideal_cost.array() * 100.0).matrix();
  out.shed_flag = ipb.shed_flag;
  return out;
}

double fepc(const grid::Network& net, const ReserveConfig& rc, const grid::LoadProfile& forecast,
            const grid::LoadProfile& actual, std::size_t hour, const DispatchOptions& opts) {
  if (hour >= actual.hours()) throw ValidationError("fepc: hour out of range");
  return fepc_profile(net, rc, forecast, actual, opts).fepc(static_cast<Index>(hour));
}

std::string daed_to_csv(const grid::Network& net, const DaedSolution& sol) {
  csv::Writer w({"hour", "generator", "p_mw"});
  for (Index i = 0; i < sol.p.cols(); ++i)
    for (Index j = 0; j < sol.p.rows(); ++j)
      w.row({std::to_string(i + 1), net.generators()[sz(j)].id, csv::format_double(sol.p(j, i))});
  return w.str();
}

std::string ipb_generation_csv(const grid::Network& net, const IpbSolution& sol) {
  csv::Writer w({"hour", "generator", "p_mw"});
  for (Index i = 0; i < sol.p_adjusted.cols(); ++i)
    for (Index j = 0; j < sol.p_adjusted.rows(); ++j)
      w.row({std::to_string(i + 1), net.generators()[sz(j)].id, csv::format_double(sol.p_adjusted(j, i))});
  return w.str();
}

std::string ipb_storage_csv(const grid::Network& net, const IpbSolution& sol) {
  csv::Writer w({"hour", "bess", "discharge_mw", "charge_mw", "energy_mwh"});
  for (Index i = 0; i < sol.discharge.cols(); ++i)
    for (Index x = 0; x < sol.discharge.rows(); ++x)
      w.row({std::to_string(i + 1), net.bess_units()[sz(x)].id, csv::format_double(sol.discharge(x, i)),
             csv::format_double(sol.charge(x, i)), csv::format_double(sol.energy(x, i))});
  return w.str();
}

}  // namespace costcast::dispatch
