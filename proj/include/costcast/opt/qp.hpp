#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "json.hpp"

namespace costcast::opt {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Max-abs norm; 0 for empty objects.
template <class Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

/// min 0.5 x'Qx + q'x + constant  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lo <= x <= hi.
/// Q is either the diagonal `q_diag` or, when non-empty, the dense `q_dense`.
struct QuadraticProgram {
  Eigen::VectorXd q;
  Eigen::VectorXd q_diag;
  Eigen::MatrixXd q_dense;
  double constant = 0.0;
  SparseRows a_eq;
  Eigen::VectorXd b_eq;
  SparseRows a_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index n() const { return q.size(); }
  bool dense_hessian() const { return q_dense.size() > 0; }

  /// Throws ValidationError on inconsistent dimensions, lo > hi, non-finite data
  /// or an asymmetric / negative-diagonal Hessian.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::VectorXd hessian_times(const Eigen::VectorXd& v) const;
};

/// Incremental sparse assembly of a QuadraticProgram.
class QpBuilder {
 public:
  using Terms = std::vector<std::pair<int, double>>;

  int add_var(double lo, double hi, double linear = 0.0, double quadratic = 0.0);
  int var_count() const { return static_cast<int>(q_.size()); }
  void add_constant(double c) { constant_ += c; }
  void add_linear(int var, double c) { q_[static_cast<std::size_t>(var)] += c; }
  int add_eq(const Terms& terms, double rhs);
  int add_le(const Terms& terms, double rhs);
  int add_ge(const Terms& terms, double rhs);
  int eq_count() const { return static_cast<int>(b_eq_.size()); }
  int in_count() const { return static_cast<int>(b_in_.size()); }

  QuadraticProgram build() const;

 private:
  std::vector<double> q_, qd_, lo_, hi_, b_eq_, b_in_;
  std::vector<Eigen::Triplet<double>> eq_, in_;
  double constant_ = 0.0;
};

/// Builds a QP from dense blocks (convenient for tests and small problems).
QuadraticProgram dense_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                          const Eigen::MatrixXd& a_eq, const Eigen::VectorXd& b_eq,
                          const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in,
                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

enum class Status { optimal, infeasible, unbounded, iteration_limit };
std::string to_string(Status s);

struct Solution {
  Eigen::VectorXd x;
  double objective = 0.0;
  Status status = Status::iteration_limit;
  double kkt_residual = kInf;
  /// Multipliers in the sign convention grad f + A_eq' lambda + A_in' mu = bound terms.
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd mu_in;
  int iterations = 0;
  /// Branch-and-bound nodes explored beyond the root (mixed-binary solves only).
  int nodes = 0;
  /// Largest constraint violation left when status is infeasible.
  double infeasibility = 0.0;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iterations = 0;  // 0: automatic from problem size
  /// Warm start; projected onto the bounds before use.
  const Eigen::VectorXd* x0 = nullptr;
  /// Bound overrides applied on top of the problem's own bounds.
  const Eigen::VectorXd* lo = nullptr;
  const Eigen::VectorXd* hi = nullptr;
  /// Use the general dense KKT path even when Q is diagonal.
  bool force_dense = false;
  /// When non-empty, the problem is written to this JSON file before solving.
  std::string dump_path;
};

Solution solve_qp(const QuadraticProgram& p, const SolveOptions& opts = {});

/// Worst of stationarity, primal, dual and complementarity violations in the
/// original problem space for the given primal/dual point.
double kkt_residual(const QuadraticProgram& p, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& lambda_eq, const Eigen::VectorXd& mu_in,
                    const Eigen::VectorXd* lo = nullptr, const Eigen::VectorXd* hi = nullptr);

/// Largest violation of equalities, inequalities and bounds.
double primal_violation(const QuadraticProgram& p, const Eigen::VectorXd& x,
                        const Eigen::VectorXd* lo = nullptr, const Eigen::VectorXd* hi = nullptr);

nlohmann::json qp_to_json(const QuadraticProgram& p);
QuadraticProgram qp_from_json(const nlohmann::json& j);

struct MixedBinaryQp {
  QuadraticProgram base;
  /// (v_plus, v_minus) variable indices; each pair satisfies v_plus + v_minus = 1
  /// with both binary. Rows of `base` couple them to continuous variables.
  std::vector<std::pair<int, int>> binary_pairs;

  void validate(int max_pairs) const;
};

struct MixedBinaryOptions {
  double tol = 1e-8;
  int max_pairs = 96;
  int max_nodes = 20000;
  const Eigen::VectorXd* x0 = nullptr;
};

Solution solve_mixed_binary(const MixedBinaryQp& p, const MixedBinaryOptions& opts = {});

}  // namespace costcast::opt
