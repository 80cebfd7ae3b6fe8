#include "costcast/opt/qp.hpp"

#include <algorithm>
#include <cmath>

#include "costcast/common/errors.hpp"

namespace costcast::opt {

namespace {

[[noreturn]] void reject(const std::string& what) { throw ValidationError("quadratic program: " + what); }

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

const Eigen::VectorXd& pick(const Eigen::VectorXd* override_v, const Eigen::VectorXd& own) {
  return override_v ? *override_v : own;
}

}  // namespace

void QuadraticProgram::validate() const {
  const Eigen::Index nv = n();
  if (nv == 0) reject("no variables");
  if (lo.size() != nv || hi.size() != nv) reject("bound vectors must have n entries");
  if (dense_hessian()) {
    if (q_dense.rows() != nv || q_dense.cols() != nv) reject("Q must be n x n");
    if (!q_dense.allFinite()) reject("Q has non-finite entries");
    const double scale = std::max(1.0, inf_norm(q_dense));
    if (inf_norm(q_dense - q_dense.transpose()) > 1e-12 * scale) reject("Q is not symmetric");
    if ((q_dense.diagonal().array() < 0.0).any()) reject("Q has a negative diagonal entry");
  } else {
    if (q_diag.size() != nv) reject("diagonal of Q must have n entries");
    if (!all_finite(q_diag) || (q_diag.array() < 0.0).any()) reject("diagonal of Q must be finite and non-negative");
  }
  if (!all_finite(q)) reject("linear cost has non-finite entries");
  if (a_eq.rows() != b_eq.size()) reject("A_eq rows and b_eq size differ");
  if (a_in.rows() != b_in.size()) reject("A_in rows and b_in size differ");
  if (a_eq.rows() > 0 && a_eq.cols() != nv) reject("A_eq must have n columns");
  if (a_in.rows() > 0 && a_in.cols() != nv) reject("A_in must have n columns");
  if (!all_finite(b_eq) || !all_finite(b_in)) reject("right-hand sides must be finite");
  for (Eigen::Index j = 0; j < nv; ++j) {
    if (std::isnan(lo(j)) || std::isnan(hi(j))) reject("bounds must not be NaN");
    if (lo(j) > hi(j)) reject("lo > hi at variable " + std::to_string(j));
  }
}

Eigen::VectorXd QuadraticProgram::hessian_times(const Eigen::VectorXd& v) const {
  if (dense_hessian()) return q_dense * v;
  return q_diag.cwiseProduct(v);
}

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(hessian_times(x)) + q.dot(x) + constant;
}

Eigen::VectorXd QuadraticProgram::gradient(const Eigen::VectorXd& x) const {
  return hessian_times(x) + q;
}

int QpBuilder::add_var(double lo, double hi, double linear, double quadratic) {
  q_.push_back(linear);
  qd_.push_back(quadratic);
  lo_.push_back(lo);
  hi_.push_back(hi);
  return static_cast<int>(q_.size()) - 1;
}

int QpBuilder::add_eq(const Terms& terms, double rhs) {
  const int row = static_cast<int>(b_eq_.size());
  for (const auto& [j, v] : terms)
    if (v != 0.0) eq_.emplace_back(row, j, v);
  b_eq_.push_back(rhs);
  return row;
}

int QpBuilder::add_le(const Terms& terms, double rhs) {
  const int row = static_cast<int>(b_in_.size());
  for (const auto& [j, v] : terms)
    if (v != 0.0) in_.emplace_back(row, j, v);
  b_in_.push_back(rhs);
  return row;
}

int QpBuilder::add_ge(const Terms& terms, double rhs) {
  Terms neg = terms;
  for (auto& t : neg) t.second = -t.second;
  return add_le(neg, -rhs);
}

QuadraticProgram QpBuilder::build() const {
  const auto nv = static_cast<Eigen::Index>(q_.size());
  auto to_vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  QuadraticProgram p;
  p.q = to_vec(q_);
  p.q_diag = to_vec(qd_);
  p.lo = to_vec(lo_);
  p.hi = to_vec(hi_);
  p.constant = constant_;
  p.b_eq = to_vec(b_eq_);
  p.b_in = to_vec(b_in_);
  p.a_eq.resize(static_cast<Eigen::Index>(b_eq_.size()), nv);
  p.a_eq.setFromTriplets(eq_.begin(), eq_.end());
  p.a_in.resize(static_cast<Eigen::Index>(b_in_.size()), nv);
  p.a_in.setFromTriplets(in_.begin(), in_.end());
  p.validate();
  return p;
}

QuadraticProgram dense_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                          const Eigen::MatrixXd& a_eq, const Eigen::VectorXd& b_eq,
                          const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in,
                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  QuadraticProgram p;
  p.q = q;
  const bool diagonal = Q.rows() == Q.cols() && Q.isDiagonal(0.0);
  if (diagonal)
    p.q_diag = Q.diagonal();
  else
    p.q_dense = Q;
  p.a_eq = a_eq.sparseView();
  p.b_eq = b_eq;
  p.a_in = a_in.sparseView();
  p.b_in = b_in;
  p.lo = lo;
  p.hi = hi;
  if (a_eq.rows() == 0) p.a_eq.resize(0, q.size());
  if (a_in.rows() == 0) p.a_in.resize(0, q.size());
  p.validate();
  return p;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

double primal_violation(const QuadraticProgram& p, const Eigen::VectorXd& x, const Eigen::VectorXd* lo_o,
                        const Eigen::VectorXd* hi_o) {
  const auto& lo = pick(lo_o, p.lo);
  const auto& hi = pick(hi_o, p.hi);
  double v = 0.0;
  if (p.a_eq.rows() > 0) v = std::max(v, inf_norm(p.a_eq * x - p.b_eq));
  if (p.a_in.rows() > 0) v = std::max(v, (p.a_in * x - p.b_in).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) v = std::max({v, lo(j) - x(j), x(j) - hi(j)});
  return v;
}

double kkt_residual(const QuadraticProgram& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lambda_eq,
                    const Eigen::VectorXd& mu_in, const Eigen::VectorXd* lo_o, const Eigen::VectorXd* hi_o) {
  const auto& lo = pick(lo_o, p.lo);
  const auto& hi = pick(hi_o, p.hi);
  Eigen::VectorXd r = p.gradient(x);
  if (p.a_eq.rows() > 0) r += p.a_eq.transpose() * lambda_eq;
  if (p.a_in.rows() > 0) r += p.a_in.transpose() * mu_in;

  double worst = primal_violation(p, x, lo_o, hi_o);
  // Each variable may be interior, at its lower bound (needs r >= 0) or at its
  // upper bound (needs r <= 0); score the most favourable reading.
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (lo(j) == hi(j)) continue;
    const double rj = r(j);
    double best = std::abs(rj);
    if (std::isfinite(lo(j))) best = std::min(best, std::max(0.0, -rj) + std::abs(rj) * std::abs(x(j) - lo(j)));
    if (std::isfinite(hi(j))) best = std::min(best, std::max(0.0, rj) + std::abs(rj) * std::abs(hi(j) - x(j)));
    worst = std::max(worst, best);
  }
  if (p.a_in.rows() > 0) {
    const Eigen::VectorXd slack = p.a_in * x - p.b_in;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      worst = std::max(worst, -mu_in(i));
      worst = std::max(worst, std::abs(mu_in(i) * slack(i)));
    }
  }
  return worst;
}

namespace {

nlohmann::json rows_to_json(const SparseRows& a) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (SparseRows::InnerIterator it(a, r); it; ++it) row.push_back({it.col(), it.value()});
    out.push_back(row);
  }
  return out;
}

SparseRows rows_from_json(const nlohmann::json& j, Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t r = 0; r < j.size(); ++r)
    for (const auto& e : j[r]) t.emplace_back(static_cast<int>(r), e[0].get<int>(), e[1].get<double>());
  SparseRows a(static_cast<Eigen::Index>(j.size()), n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// JSON has no infinity; unbounded sides are written as null.
nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i)))
      out.push_back(v(i));
    else
      out.push_back(nullptr);
  }
  return out;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j, double null_value) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].is_null() ? null_value : j[i].get<double>();
  return v;
}

}  // namespace

nlohmann::json qp_to_json(const QuadraticProgram& p) {
  nlohmann::json j;
  j["n"] = p.n();
  j["q"] = vec_to_json(p.q);
  if (p.dense_hessian()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < p.q_dense.rows(); ++r) rows.push_back(vec_to_json(p.q_dense.row(r).transpose()));
    j["q_dense"] = rows;
  } else {
    j["q_diag"] = vec_to_json(p.q_diag);
  }
  j["constant"] = p.constant;
  j["a_eq"] = rows_to_json(p.a_eq);
  j["b_eq"] = vec_to_json(p.b_eq);
  j["a_in"] = rows_to_json(p.a_in);
  j["b_in"] = vec_to_json(p.b_in);
  j["lo"] = vec_to_json(p.lo);
  j["hi"] = vec_to_json(p.hi);
  return j;
}

QuadraticProgram qp_from_json(const nlohmann::json& j) {
  try {
    QuadraticProgram p;
    const auto n = j.at("n").get<Eigen::Index>();
    p.q = vec_from_json(j.at("q"), 0.0);
    if (j.contains("q_dense")) {
      const auto& rows = j.at("q_dense");
      p.q_dense.resize(n, n);
      for (Eigen::Index r = 0; r < n; ++r) p.q_dense.row(r) = vec_from_json(rows.at(static_cast<std::size_t>(r)), 0.0).transpose();
    } else {
      p.q_diag = vec_from_json(j.at("q_diag"), 0.0);
    }
    p.constant = j.at("constant").get<double>();
    p.a_eq = rows_from_json(j.at("a_eq"), n);
    p.b_eq = vec_from_json(j.at("b_eq"), 0.0);
    p.a_in = rows_from_json(j.at("a_in"), n);
    p.b_in = vec_from_json(j.at("b_in"), 0.0);
    p.lo = vec_from_json(j.at("lo"), -kInf);
    p.hi = vec_from_json(j.at("hi"), kInf);
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("quadratic program: ") + e.what());
  }
}

void MixedBinaryQp::validate(int max_pairs) const {
  base.validate();
  if (static_cast<int>(binary_pairs.size()) > max_pairs)
    throw ValidationError("mixed-binary program: " + std::to_string(binary_pairs.size()) +
                          " binary pairs exceed the configured limit of " + std::to_string(max_pairs));
  std::vector<char> used(static_cast<std::size_t>(base.n()), 0);
  for (const auto& [a, b] : binary_pairs) {
    for (int v : {a, b}) {
      if (v < 0 || v >= base.n()) throw ValidationError("mixed-binary program: binary index out of range");
      if (used[static_cast<std::size_t>(v)]) throw ValidationError("mixed-binary program: binary indices overlap");
      used[static_cast<std::size_t>(v)] = 1;
    }
  }
}

}  // namespace costcast::opt
