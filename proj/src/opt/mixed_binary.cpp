#include <algorithm>
#include <cmath>
#include <vector>

#include "costcast/common/errors.hpp"
#include "costcast/opt/qp.hpp"

namespace costcast::opt {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

// The problem with every v_minus replaced by 1 - v_plus.
struct Reduced {
  QuadraticProgram qp;
  std::vector<int> new_index;      // original variable -> reduced, -1 for v_minus
  std::vector<int> binaries;       // reduced indices of v_plus
  std::vector<int> eq_rows;        // reduced eq row -> original row
  std::vector<int> in_rows;        // reduced in row -> original row
  std::vector<std::vector<int>> col_rows_in;  // reduced var -> inequality rows touching it
  std::vector<std::vector<int>> col_rows_eq;
  bool infeasible = false;
};

Reduced reduce(const MixedBinaryQp& p) {
  const QuadraticProgram& b = p.base;
  const Index n = b.n();
  Reduced r;
  std::vector<int> partner(static_cast<std::size_t>(n), -1);  // v_minus -> v_plus
  for (const auto& [vp, vm] : p.binary_pairs) partner[static_cast<std::size_t>(vm)] = vp;
  r.new_index.assign(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (Index j = 0; j < n; ++j)
    if (partner[static_cast<std::size_t>(j)] < 0) r.new_index[static_cast<std::size_t>(j)] = next++;
  const Index nr = next;

  // x = T y + t with T selecting kept columns and mapping v_minus to -v_plus.
  QuadraticProgram& q = r.qp;
  q.q = VectorXd::Zero(nr);
  q.lo.resize(nr);
  q.hi.resize(nr);
  q.constant = b.constant;
  if (b.dense_hessian()) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, nr);
    VectorXd shift = VectorXd::Zero(n);
    for (Index j = 0; j < n; ++j) {
      const int pj = partner[static_cast<std::size_t>(j)];
      if (pj < 0) {
        t(j, r.new_index[static_cast<std::size_t>(j)]) = 1.0;
      } else {
        t(j, r.new_index[static_cast<std::size_t>(pj)]) = -1.0;
        shift(j) = 1.0;
      }
    }
    q.q_dense = t.transpose() * b.q_dense * t;
    q.q_dense = 0.5 * (q.q_dense + q.q_dense.transpose()).eval();
    q.q = t.transpose() * (b.q + b.q_dense * shift);
    q.constant += 0.5 * shift.dot(b.q_dense * shift) + b.q.dot(shift);
  } else {
    q.q_diag = VectorXd::Zero(nr);
    for (Index j = 0; j < n; ++j) {
      const int pj = partner[static_cast<std::size_t>(j)];
      if (pj < 0) {
        const int k = r.new_index[static_cast<std::size_t>(j)];
        q.q(k) += b.q(j);
        q.q_diag(k) += b.q_diag(j);
      } else {
        // 0.5 h (1 - v)^2 + c (1 - v)
        const int k = r.new_index[static_cast<std::size_t>(pj)];
        q.q_diag(k) += b.q_diag(j);
        q.q(k) -= b.q_diag(j) + b.q(j);
        q.constant += 0.5 * b.q_diag(j) + b.q(j);
      }
    }
  }
  for (Index j = 0; j < n; ++j) {
    const int k = r.new_index[static_cast<std::size_t>(j)];
    if (k >= 0) {
      q.lo(k) = b.lo(j);
      q.hi(k) = b.hi(j);
    }
  }
  for (const auto& [vp, vm] : p.binary_pairs) {
    const int k = r.new_index[static_cast<std::size_t>(vp)];
    q.lo(k) = std::max({q.lo(k), 1.0 - b.hi(vm), 0.0});
    q.hi(k) = std::min({q.hi(k), 1.0 - b.lo(vm), 1.0});
    r.binaries.push_back(k);
    if (q.lo(k) > q.hi(k)) r.infeasible = true;
  }

  auto reduce_rows = [&](const SparseRows& a, const VectorXd& rhs, bool equality, SparseRows& out_a,
                         VectorXd& out_b, std::vector<int>& origin) {
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> bvec;
    for (Index row = 0; row < a.rows(); ++row) {
      std::vector<double> dense_row;
      std::vector<std::pair<int, double>> terms;
      double rr = rhs(row);
      for (SparseRows::InnerIterator it(a, row); it; ++it) {
        const Index j = it.col();
        const int pj = partner[static_cast<std::size_t>(j)];
        if (pj < 0) {
          terms.emplace_back(r.new_index[static_cast<std::size_t>(j)], it.value());
        } else {
          terms.emplace_back(r.new_index[static_cast<std::size_t>(pj)], -it.value());
          rr -= it.value();
        }
      }
      std::sort(terms.begin(), terms.end());
      std::vector<std::pair<int, double>> merged;
      for (const auto& t : terms) {
        if (!merged.empty() && merged.back().first == t.first)
          merged.back().second += t.second;
        else
          merged.push_back(t);
      }
      double amax = 0.0;
      for (const auto& t : merged) amax = std::max(amax, std::abs(t.second));
      if (amax == 0.0) {
        const double slack = 1e-12 * std::max(1.0, std::abs(rhs(row)));
        if (equality ? std::abs(rr) > slack : rr < -slack) r.infeasible = true;
        continue;
      }
      const int out_row = static_cast<int>(bvec.size());
      for (const auto& t : merged)
        if (t.second != 0.0) trip.emplace_back(out_row, t.first, t.second);
      bvec.push_back(rr);
      origin.push_back(static_cast<int>(row));
    }
    out_a.resize(static_cast<Index>(bvec.size()), nr);
    out_a.setFromTriplets(trip.begin(), trip.end());
    out_b = Eigen::Map<VectorXd>(bvec.data(), static_cast<Index>(bvec.size()));
  };
  reduce_rows(b.a_eq, b.b_eq, true, q.a_eq, q.b_eq, r.eq_rows);
  reduce_rows(b.a_in, b.b_in, false, q.a_in, q.b_in, r.in_rows);

  r.col_rows_in.assign(static_cast<std::size_t>(nr), {});
  r.col_rows_eq.assign(static_cast<std::size_t>(nr), {});
  for (Index row = 0; row < q.a_in.rows(); ++row)
    for (SparseRows::InnerIterator it(q.a_in, row); it; ++it)
      r.col_rows_in[static_cast<std::size_t>(it.col())].push_back(static_cast<int>(row));
  for (Index row = 0; row < q.a_eq.rows(); ++row)
    for (SparseRows::InnerIterator it(q.a_eq, row); it; ++it)
      r.col_rows_eq[static_cast<std::size_t>(it.col())].push_back(static_cast<int>(row));
  return r;
}

double row_value(const SparseRows& a, Index row, const VectorXd& x) {
  double s = 0.0;
  for (SparseRows::InnerIterator it(a, row); it; ++it) s += it.value() * x(it.col());
  return s;
}

// Rounds fractional binaries one at a time, keeping every touched row feasible.
bool try_round(const Reduced& r, VectorXd& x, double feas) {
  for (int k : r.binaries) {
    const double v = x(k);
    if (std::abs(v - std::round(v)) <= 1e-9) {
      x(k) = std::round(v);
      continue;
    }
    bool placed = false;
    for (double cand : {1.0, 0.0}) {
      if (cand < r.qp.lo(k) || cand > r.qp.hi(k)) continue;
      x(k) = cand;
      bool ok = true;
      for (int row : r.col_rows_in[static_cast<std::size_t>(k)])
        ok = ok && row_value(r.qp.a_in, row, x) - r.qp.b_in(row) <= feas;
      for (int row : r.col_rows_eq[static_cast<std::size_t>(k)])
        ok = ok && std::abs(row_value(r.qp.a_eq, row, x) - r.qp.b_eq(row)) <= feas;
      if (ok) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      x(k) = v;
      return false;
    }
  }
  return true;
}

struct Node {
  VectorXd lo, hi, warm;
  double bound;
};

}  // namespace

Solution solve_mixed_binary(const MixedBinaryQp& p, const MixedBinaryOptions& opts) {
  p.validate(opts.max_pairs);
  const Reduced r = reduce(p);
  Solution out;
  out.x = VectorXd::Zero(p.base.n());
  out.lambda_eq = VectorXd::Zero(p.base.a_eq.rows());
  out.mu_in = VectorXd::Zero(p.base.a_in.rows());
  if (r.infeasible) {
    out.status = Status::infeasible;
    return out;
  }

  const Index nr = r.qp.n();
  VectorXd warm = VectorXd::Zero(nr);
  if (opts.x0) {
    for (Index j = 0; j < p.base.n(); ++j) {
      const int k = r.new_index[static_cast<std::size_t>(j)];
      if (k >= 0) warm(k) = (*opts.x0)(j);
    }
  }
  const double feas = 1e-9 * std::max(1.0, r.qp.b_in.size() ? inf_norm(r.qp.b_in) : 1.0);

  std::vector<Node> stack;
  stack.push_back({r.qp.lo, r.qp.hi, warm, -kInf});
  double incumbent = kInf;
  VectorXd best;
  int nodes_solved = 0;
  int total_iterations = 0;
  bool limit_hit = false;

  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    const double prune_eps = 1e-9 * std::max(1.0, std::abs(incumbent));
    if (node.bound >= incumbent - prune_eps) continue;
    if (nodes_solved > opts.max_nodes) {
      limit_hit = true;
      break;
    }
    SolveOptions so;
    so.tol = opts.tol;
    so.x0 = &node.warm;
    so.lo = &node.lo;
    so.hi = &node.hi;
    const Solution rel = solve_qp(r.qp, so);
    ++nodes_solved;
    total_iterations += rel.iterations;
    if (rel.status == Status::infeasible) continue;
    if (rel.status != Status::optimal) {
      limit_hit = true;
      continue;
    }
    if (rel.objective >= incumbent - prune_eps) continue;

    VectorXd rounded = rel.x;
    if (try_round(r, rounded, feas)) {
      const double obj = r.qp.objective(rounded);
      if (obj <= rel.objective + 1e-9 * std::max(1.0, std::abs(rel.objective))) {
        incumbent = obj;
        best = rounded;
        continue;
      }
    }
    int branch = -1;
    double frac_best = -1.0;
    for (int k : r.binaries) {
      const double f = std::abs(rel.x(k) - std::round(rel.x(k)));
      if (f > 1e-9 && f > frac_best) {
        frac_best = f;
        branch = k;
      }
    }
    if (branch < 0) {
      // Integral but rounding moved the objective: accept the relaxation point itself.
      for (int k : r.binaries) rounded(k) = std::round(rel.x(k));
      incumbent = r.qp.objective(rounded);
      best = rounded;
      continue;
    }
    Node up{node.lo, node.hi, rel.x, rel.objective};
    up.lo(branch) = 1.0;
    up.hi(branch) = 1.0;
    Node down{node.lo, node.hi, rel.x, rel.objective};
    down.lo(branch) = 0.0;
    down.hi(branch) = 0.0;
    // Depth-first: the child nearer the relaxation value is explored first.
    if (rel.x(branch) >= 0.5) {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    } else {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    }
  }

  out.nodes = std::max(0, nodes_solved - 1);
  if (best.size() == 0) {
    out.status = limit_hit ? Status::iteration_limit : Status::infeasible;
    out.iterations = total_iterations;
    return out;
  }

  // Final solve with the binaries fixed gives the continuous part and its multipliers.
  VectorXd lo = r.qp.lo, hi = r.qp.hi;
  for (int k : r.binaries) lo(k) = hi(k) = best(k);
  SolveOptions so;
  so.tol = opts.tol;
  so.x0 = &best;
  so.lo = &lo;
  so.hi = &hi;
  const Solution fixed = solve_qp(r.qp, so);
  total_iterations += fixed.iterations;
  const VectorXd& xr = fixed.status == Status::optimal ? fixed.x : best;

  for (Index j = 0; j < p.base.n(); ++j) {
    const int k = r.new_index[static_cast<std::size_t>(j)];
    if (k >= 0) out.x(j) = xr(k);
  }
  for (const auto& [vp, vm] : p.binary_pairs) out.x(vm) = 1.0 - out.x(vp);
  if (fixed.status == Status::optimal) {
    for (std::size_t i = 0; i < r.eq_rows.size(); ++i) out.lambda_eq(r.eq_rows[i]) = fixed.lambda_eq(static_cast<Index>(i));
    for (std::size_t i = 0; i < r.in_rows.size(); ++i) out.mu_in(r.in_rows[i]) = fixed.mu_in(static_cast<Index>(i));
  }
  out.objective = p.base.objective(out.x);
  out.kkt_residual = fixed.kkt_residual;
  out.iterations = total_iterations;
  out.status = limit_hit && fixed.status == Status::optimal ? Status::iteration_limit : fixed.status;
  return out;
}

}  // namespace costcast::opt
