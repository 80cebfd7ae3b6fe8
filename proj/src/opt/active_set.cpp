#include <algorithm>
#include <cmath>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/opt/qp.hpp"

namespace costcast::opt {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Entry {
  int col;
  double val;
};

struct Row {
  std::vector<Entry> entries;
  double rhs = 0.0;
  bool equality = false;
};

// Problem augmented with elastic slack columns for rows violated at the start.
struct Augmented {
  Index n_orig = 0;
  Index n = 0;
  std::vector<Row> rows;  // equalities first, then inequalities
  Index m_eq = 0;
  VectorXd lo, hi, q, hdiag;
  MatrixXd hdense;  // empty unless the Hessian is dense
  std::vector<int> slack_cols;
  VectorXd slack_init;

  double dot_row(const Row& r, const VectorXd& x) const {
    double s = 0.0;
    for (const auto& e : r.entries) s += e.val * x(e.col);
    return s;
  }
  VectorXd hess(const VectorXd& x) const {
    if (hdense.size() > 0) {
      VectorXd out = VectorXd::Zero(n);
      out.head(n_orig) = hdense * x.head(n_orig);
      return out;
    }
    return hdiag.cwiseProduct(x);
  }
};

enum class CoreResult { optimal, unbounded, iteration_limit };

struct Direction {
  VectorXd d;       // over all variables, zero on fixed ones
  VectorXd lambda;  // over working rows
  bool ray = false;
  bool ok = true;
};

// Solves a square system, falling back to a rank-revealing least-squares
// solve when LU is inaccurate. Returns false if the system is inconsistent.
bool robust_solve(const MatrixXd& k, const VectorXd& rhs, VectorXd& sol) {
  const double scale = std::max(1.0, inf_norm(rhs)) * std::max(1.0, inf_norm(k));
  if (k.rows() == 0) {
    sol.resize(0);
    return true;
  }
  Eigen::PartialPivLU<MatrixXd> lu(k);
  sol = lu.solve(rhs);
  if (sol.allFinite() && inf_norm(k * sol - rhs) <= 1e-11 * scale) return true;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(k);
  cod.setThreshold(1e-12);
  sol = cod.solve(rhs);
  return sol.allFinite() && inf_norm(k * sol - rhs) <= 1e-9 * scale;
}

class ActiveSet {
 public:
  ActiveSet(const Augmented& a, double tol, int max_iter, bool force_dense)
      : a_(a), tol_(tol), max_iter_(max_iter), dense_(force_dense || a.hdense.size() > 0) {}

  CoreResult run(VectorXd& x, std::vector<signed char>& state, std::vector<char>& in_w, int& iterations) {
    int degenerate = 0;
    bool at_min = false;  // previous step was a full, unblocked Newton step
    for (; iterations < max_iter_; ++iterations) {
      const VectorXd g = a_.hess(x) + a_.q;
      std::vector<int> work;
      for (Index i = 0; i < static_cast<Index>(a_.rows.size()); ++i)
        if (a_.rows[static_cast<std::size_t>(i)].equality || in_w[static_cast<std::size_t>(i)])
          work.push_back(static_cast<int>(i));

      Direction dir = dense_ ? direction_dense(x, g, state, work) : direction_diag(x, g, state, work);
      last_work_ = work;
      last_lambda_ = dir.lambda;

      const double xscale = std::max(1.0, inf_norm(x));
      const double dnorm = dir.d.size() ? inf_norm(dir.d) : 0.0;
      if (!dir.ray && (at_min || dnorm <= 1e-11 * xscale)) {
        at_min = false;
        // Stationary on the working set: look for a constraint to release.
        int drop_var = -1, drop_row = -1;
        double worst = -dual_tol();
        const bool bland = degenerate > kBlandAfter;
        VectorXd atl = VectorXd::Zero(a_.n);
        for (std::size_t w = 0; w < work.size(); ++w)
          for (const auto& e : a_.rows[static_cast<std::size_t>(work[w])].entries) atl(e.col) += e.val * dir.lambda(static_cast<Index>(w));
        for (Index j = 0; j < a_.n; ++j) {
          const signed char s = state[static_cast<std::size_t>(j)];
          if (s == 0 || a_.lo(j) == a_.hi(j)) continue;
          const double z = g(j) + atl(j);
          const double signed_mult = s < 0 ? z : -z;
          if (signed_mult < worst) {
            worst = signed_mult;
            drop_var = static_cast<int>(j);
            if (bland) break;
          }
        }
        if (!(bland && drop_var >= 0)) {
          for (std::size_t w = 0; w < work.size(); ++w) {
            const auto& row = a_.rows[static_cast<std::size_t>(work[w])];
            if (row.equality) continue;
            const double mu = dir.lambda(static_cast<Index>(w));
            if (mu < worst) {
              worst = mu;
              drop_row = work[w];
              drop_var = -1;
              if (bland) break;
            }
          }
        }
        if (drop_var < 0 && drop_row < 0) return CoreResult::optimal;
        if (drop_row >= 0)
          in_w[static_cast<std::size_t>(drop_row)] = 0;
        else
          state[static_cast<std::size_t>(drop_var)] = 0;
        continue;
      }

      // Ratio test along d.
      const double cap = dir.ray ? kInf : 1.0;
      double alpha = cap;
      int block_var = -1, block_row = -1;
      const double deps = 1e-13 * std::max(1.0, dnorm);
      for (Index j = 0; j < a_.n; ++j) {
        if (state[static_cast<std::size_t>(j)] != 0) continue;
        const double dj = dir.d(j);
        double t = kInf;
        if (dj < -deps && std::isfinite(a_.lo(j)))
          t = std::max(0.0, (a_.lo(j) - x(j)) / dj);
        else if (dj > deps && std::isfinite(a_.hi(j)))
          t = std::max(0.0, (a_.hi(j) - x(j)) / dj);
        if (t < alpha) {
          alpha = t;
          block_var = static_cast<int>(j);
        }
      }
      for (Index i = a_.m_eq; i < static_cast<Index>(a_.rows.size()); ++i) {
        if (in_w[static_cast<std::size_t>(i)]) continue;
        const auto& row = a_.rows[static_cast<std::size_t>(i)];
        double ad = 0.0, rowmax = 0.0;
        for (const auto& e : row.entries) {
          ad += e.val * dir.d(e.col);
          rowmax = std::max(rowmax, std::abs(e.val));
        }
        if (ad <= deps * std::max(1.0, rowmax)) continue;
        const double t = std::max(0.0, (row.rhs - a_.dot_row(row, x)) / ad);
        if (t < alpha) {
          alpha = t;
          block_row = static_cast<int>(i);
          block_var = -1;
        }
      }
      if (!std::isfinite(alpha)) return CoreResult::unbounded;

      x += alpha * dir.d;
      at_min = dir.ok && block_var < 0 && block_row < 0;
      if (block_var >= 0) {
        const double dj = dir.d(block_var);
        state[static_cast<std::size_t>(block_var)] = dj < 0 ? -1 : 1;
        x(block_var) = dj < 0 ? a_.lo(block_var) : a_.hi(block_var);
      } else if (block_row >= 0) {
        in_w[static_cast<std::size_t>(block_row)] = 1;
      }
      degenerate = (alpha * dnorm <= 1e-14 * xscale) ? degenerate + 1 : 0;
    }
    return CoreResult::iteration_limit;
  }

  const std::vector<int>& last_work() const { return last_work_; }
  const VectorXd& last_lambda() const { return last_lambda_; }

 private:
  static constexpr int kBlandAfter = 40;

  double dual_tol() const { return 0.1 * tol_; }

  // Free variables split into positive-curvature (P) and zero-curvature (Z).
  Direction direction_diag(const VectorXd& x, const VectorXd& g, const std::vector<signed char>& state,
                           const std::vector<int>& work) {
    Direction out;
    out.d = VectorXd::Zero(a_.n);
    std::vector<int> pos(static_cast<std::size_t>(a_.n), -1);
    std::vector<int> pvars, zvars;
    for (Index j = 0; j < a_.n; ++j) {
      if (state[static_cast<std::size_t>(j)] != 0) continue;
      if (a_.hdiag(j) > 0.0) {
        pos[static_cast<std::size_t>(j)] = static_cast<int>(pvars.size());
        pvars.push_back(static_cast<int>(j));
      } else {
        pos[static_cast<std::size_t>(j)] = static_cast<int>(zvars.size());
        zvars.push_back(static_cast<int>(j));
      }
    }
    const Index mw = static_cast<Index>(work.size());
    const Index np = static_cast<Index>(pvars.size()), nz = static_cast<Index>(zvars.size());
    MatrixXd ap = MatrixXd::Zero(mw, np), az = MatrixXd::Zero(mw, nz);
    VectorXd r(mw);
    for (Index w = 0; w < mw; ++w) {
      const auto& row = a_.rows[static_cast<std::size_t>(work[static_cast<std::size_t>(w)])];
      for (const auto& e : row.entries) {
        const int k = pos[static_cast<std::size_t>(e.col)];
        if (k < 0) continue;
        if (a_.hdiag(e.col) > 0.0)
          ap(w, k) += e.val;
        else
          az(w, k) += e.val;
      }
      r(w) = a_.dot_row(row, x) - row.rhs;
    }
    VectorXd gp(np), hinv(np), gz(nz);
    for (Index k = 0; k < np; ++k) {
      gp(k) = g(pvars[static_cast<std::size_t>(k)]);
      hinv(k) = 1.0 / a_.hdiag(pvars[static_cast<std::size_t>(k)]);
    }
    for (Index k = 0; k < nz; ++k) gz(k) = g(zvars[static_cast<std::size_t>(k)]);

    if (nz > 0) {
      // Component of g_Z in the null space of A_Z gives a descent ray.
      VectorXd pg = gz;
      if (mw > 0) {
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(az.transpose());
        cod.setThreshold(1e-12);
        pg = gz - az.transpose() * cod.solve(gz);
      }
      const double gscale = std::max(1.0, inf_norm(gz));
      if (inf_norm(pg) > 1e-10 * gscale) {
        for (Index k = 0; k < nz; ++k) out.d(zvars[static_cast<std::size_t>(k)]) = -pg(k);
        out.lambda = VectorXd::Zero(mw);
        out.ray = true;
        return out;
      }
    }

    const MatrixXd aph = ap * hinv.asDiagonal();
    const MatrixXd s = aph * ap.transpose();
    const VectorXd rhs1 = -r + aph * gp;
    VectorXd lambda, dz;
    if (nz == 0) {
      VectorXd sol;
      out.ok = robust_solve(s, -rhs1, sol);
      lambda = sol;
    } else {
      // Saddle system in (lambda, d_Z): -S lambda + A_Z d_Z = rhs1, A_Z^T lambda = -g_Z.
      MatrixXd k(mw + nz, mw + nz);
      k << -s, az, az.transpose(), MatrixXd::Zero(nz, nz);
      VectorXd rhs(mw + nz);
      rhs << rhs1, -gz;
      VectorXd sol;
      out.ok = robust_solve(k, rhs, sol);
      lambda = sol.head(mw);
      dz = sol.tail(nz);
    }
    out.lambda = lambda;
    const VectorXd dp = -hinv.cwiseProduct(gp + ap.transpose() * lambda);
    for (Index k = 0; k < np; ++k) out.d(pvars[static_cast<std::size_t>(k)]) = dp(k);
    if (nz > 0) {
      for (Index k = 0; k < nz; ++k) out.d(zvars[static_cast<std::size_t>(k)]) = dz(k);
    }
    return out;
  }

  // General Hessian: full KKT system on the free variables.
  Direction direction_dense(const VectorXd& x, const VectorXd& g, const std::vector<signed char>& state,
                            const std::vector<int>& work) {
    Direction out;
    out.d = VectorXd::Zero(a_.n);
    std::vector<int> free_vars;
    std::vector<int> pos(static_cast<std::size_t>(a_.n), -1);
    for (Index j = 0; j < a_.n; ++j)
      if (state[static_cast<std::size_t>(j)] == 0) {
        pos[static_cast<std::size_t>(j)] = static_cast<int>(free_vars.size());
        free_vars.push_back(static_cast<int>(j));
      }
    const Index nf = static_cast<Index>(free_vars.size()), mw = static_cast<Index>(work.size());
    MatrixXd hff = MatrixXd::Zero(nf, nf);
    for (Index i = 0; i < nf; ++i)
      for (Index k = 0; k < nf; ++k) {
        const int vi = free_vars[static_cast<std::size_t>(i)], vk = free_vars[static_cast<std::size_t>(k)];
        if (a_.hdense.size() > 0) {
          if (vi < a_.n_orig && vk < a_.n_orig) hff(i, k) = a_.hdense(vi, vk);
        } else if (vi == vk) {
          hff(i, k) = a_.hdiag(vi);
        }
      }
    MatrixXd aw = MatrixXd::Zero(mw, nf);
    VectorXd r(mw), gf(nf);
    for (Index w = 0; w < mw; ++w) {
      const auto& row = a_.rows[static_cast<std::size_t>(work[static_cast<std::size_t>(w)])];
      for (const auto& e : row.entries) {
        const int k = pos[static_cast<std::size_t>(e.col)];
        if (k >= 0) aw(w, k) += e.val;
      }
      r(w) = a_.dot_row(row, x) - row.rhs;
    }
    for (Index i = 0; i < nf; ++i) gf(i) = g(free_vars[static_cast<std::size_t>(i)]);

    MatrixXd k(nf + mw, nf + mw);
    k << hff, aw.transpose(), aw, MatrixXd::Zero(mw, mw);
    VectorXd rhs(nf + mw);
    rhs << -gf, -r;
    VectorXd sol;
    if (robust_solve(k, rhs, sol)) {
      for (Index i = 0; i < nf; ++i) out.d(free_vars[static_cast<std::size_t>(i)]) = sol(i);
      out.lambda = sol.tail(mw);
      return out;
    }
    // Inconsistent KKT: g has a component along a direction of zero curvature
    // that keeps the working rows fixed.
    MatrixXd stacked(nf + mw, nf);
    stacked << hff, aw;
    Eigen::JacobiSVD<MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    const Index rank = (svd.singularValues().array() > 1e-12 * std::max(1.0, smax)).count();
    const MatrixXd null_basis = svd.matrixV().rightCols(nf - rank);
    const VectorXd dn = -null_basis * (null_basis.transpose() * gf);
    if (inf_norm(dn) <= 1e-10 * std::max(1.0, inf_norm(gf))) {
      // Only numerically inconsistent: keep the least-squares Newton step.
      for (Index i = 0; i < nf; ++i) out.d(free_vars[static_cast<std::size_t>(i)]) = sol(i);
      out.lambda = sol.tail(mw);
      out.ok = false;
      return out;
    }
    for (Index i = 0; i < nf; ++i) out.d(free_vars[static_cast<std::size_t>(i)]) = dn(i);
    out.lambda = VectorXd::Zero(mw);
    out.ray = true;
    return out;
  }

  const Augmented& a_;
  double tol_;
  int max_iter_;
  bool dense_;
  std::vector<int> last_work_;
  VectorXd last_lambda_;
};

Augmented augment(const QuadraticProgram& p, const VectorXd& lo, const VectorXd& hi, const VectorXd& x0) {
  Augmented a;
  a.n_orig = p.n();
  auto gather = [](const SparseRows& m, Index r) {
    std::vector<Entry> out;
    for (SparseRows::InnerIterator it(m, r); it; ++it) out.push_back({static_cast<int>(it.col()), it.value()});
    return out;
  };
  int next = static_cast<int>(p.n());
  const double bscale = std::max({1.0, p.b_eq.size() ? inf_norm(p.b_eq) : 0.0,
                                  p.b_in.size() ? inf_norm(p.b_in) : 0.0});
  const double feas = 1e-12 * bscale;
  std::vector<double> init;
  for (Index r = 0; r < p.a_eq.rows(); ++r) {
    Row row{gather(p.a_eq, r), p.b_eq(r), true};
    const double res = row.rhs - a.dot_row(row, x0);
    if (std::abs(res) > feas) {
      row.entries.push_back({next++, res > 0 ? 1.0 : -1.0});
      init.push_back(std::abs(res));
    }
    a.rows.push_back(std::move(row));
  }
  a.m_eq = static_cast<Index>(a.rows.size());
  for (Index r = 0; r < p.a_in.rows(); ++r) {
    Row row{gather(p.a_in, r), p.b_in(r), false};
    const double viol = a.dot_row(row, x0) - row.rhs;
    if (viol > feas) {
      row.entries.push_back({next++, -1.0});
      init.push_back(viol);
    }
    a.rows.push_back(std::move(row));
  }
  a.n = next;
  a.lo = VectorXd::Zero(a.n);
  a.hi = VectorXd::Constant(a.n, kInf);
  a.q = VectorXd::Zero(a.n);
  a.hdiag = VectorXd::Zero(a.n);
  a.lo.head(a.n_orig) = lo;
  a.hi.head(a.n_orig) = hi;
  a.q.head(a.n_orig) = p.q;
  if (p.dense_hessian())
    a.hdense = p.q_dense;
  else
    a.hdiag.head(a.n_orig) = p.q_diag;
  for (Index c = a.n_orig; c < a.n; ++c) a.slack_cols.push_back(static_cast<int>(c));
  a.slack_init = Eigen::Map<const VectorXd>(init.data(), static_cast<Index>(init.size()));
  return a;
}

double problem_scale(const QuadraticProgram& p, const VectorXd& lo, const VectorXd& hi) {
  double xs = 1.0;
  for (Index j = 0; j < p.n(); ++j) {
    if (std::isfinite(lo(j))) xs = std::max(xs, std::abs(lo(j)));
    if (std::isfinite(hi(j))) xs = std::max(xs, std::abs(hi(j)));
  }
  const double hmax = p.dense_hessian() ? inf_norm(p.q_dense) : inf_norm(p.q_diag);
  return std::max({1.0, inf_norm(p.q), hmax * xs});
}

}  // namespace

Solution solve_qp(const QuadraticProgram& p, const SolveOptions& opts) {
  p.validate();
  if (!(opts.tol > 0.0)) throw ValidationError("solve_qp: tol must be positive");
  if (!opts.dump_path.empty()) csv::write_text(opts.dump_path, qp_to_json(p).dump(1) + "\n");
  const VectorXd& lo = opts.lo ? *opts.lo : p.lo;
  const VectorXd& hi = opts.hi ? *opts.hi : p.hi;
  if (lo.size() != p.n() || hi.size() != p.n()) throw ValidationError("solve_qp: bound override has wrong size");
  for (Index j = 0; j < p.n(); ++j)
    if (lo(j) > hi(j)) {
      Solution s;
      s.x = VectorXd::Zero(p.n());
      s.status = Status::infeasible;
      s.infeasibility = lo(j) - hi(j);
      return s;
    }

  VectorXd x0 = opts.x0 ? *opts.x0 : VectorXd::Zero(p.n());
  if (x0.size() != p.n()) throw ValidationError("solve_qp: warm start has wrong size");
  for (Index j = 0; j < p.n(); ++j) {
    if (!std::isfinite(x0(j))) x0(j) = 0.0;
    x0(j) = std::clamp(x0(j), lo(j), hi(j));
  }

  Augmented a = augment(p, lo, hi, x0);
  VectorXd x(a.n);
  x.head(a.n_orig) = x0;
  x.tail(a.n - a.n_orig) = a.slack_init;
  std::vector<signed char> state(static_cast<std::size_t>(a.n), 0);
  for (Index j = 0; j < a.n; ++j) {
    if (x(j) == a.lo(j))
      state[static_cast<std::size_t>(j)] = -1;
    else if (x(j) == a.hi(j))
      state[static_cast<std::size_t>(j)] = 1;
  }
  std::vector<char> in_w(a.rows.size(), 0);

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations
                                               : static_cast<int>(20 * (a.n + static_cast<Index>(a.rows.size())) + 500);
  const double scale = problem_scale(p, lo, hi);
  const double feas_tol = 1e-9 * std::max(1.0, inf_norm(x0));
  double big_m = 1e4 * scale;
  ActiveSet solver(a, opts.tol, max_iter, opts.force_dense);

  Solution sol;
  CoreResult res = CoreResult::optimal;
  bool slack_left = false;
  for (int attempt = 0; attempt < 4; ++attempt) {
    for (int c : a.slack_cols) a.q(c) = big_m;
    res = solver.run(x, state, in_w, sol.iterations);
    if (res != CoreResult::optimal) break;
    slack_left = false;
    for (int c : a.slack_cols) slack_left = slack_left || x(c) > feas_tol;
    if (!slack_left) break;
    big_m *= 1e3;
  }

  sol.x = x.head(a.n_orig);
  sol.objective = p.objective(sol.x);
  sol.lambda_eq = VectorXd::Zero(p.a_eq.rows());
  sol.mu_in = VectorXd::Zero(p.a_in.rows());
  const auto& work = solver.last_work();
  const auto& lambda = solver.last_lambda();
  for (std::size_t w = 0; w < work.size() && static_cast<Index>(w) < lambda.size(); ++w) {
    const Index r = work[w];
    if (r < a.m_eq)
      sol.lambda_eq(r) = lambda(static_cast<Index>(w));
    else
      sol.mu_in(r - a.m_eq) = lambda(static_cast<Index>(w));
  }

  switch (res) {
    case CoreResult::unbounded: sol.status = Status::unbounded; break;
    case CoreResult::iteration_limit: sol.status = Status::iteration_limit; break;
    case CoreResult::optimal: sol.status = slack_left ? Status::infeasible : Status::optimal; break;
  }
  if (sol.status == Status::infeasible) {
    sol.infeasibility = primal_violation(p, sol.x, &lo, &hi);
  } else {
    sol.kkt_residual = kkt_residual(p, sol.x, sol.lambda_eq, sol.mu_in, &lo, &hi);
  }
  return sol;
}

}  // namespace costcast::opt
