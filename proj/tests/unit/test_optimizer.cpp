#include <cmath>

#include "doctest.h"

#include "../support/random_problems.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/opt/qp.hpp"

using namespace costcast;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("projection: min x^2 s.t. x >= 1") {
  opt::QpBuilder b;
  b.add_var(1.0, opt::kInf, 0.0, 2.0);
  const auto s = opt::solve_qp(b.build());
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(1.0));
  CHECK(s.kkt_residual <= 1e-8);
}

TEST_CASE("equal marginal cost dispatch of two units") {
  opt::QpBuilder b;
  const int p1 = b.add_var(0.0, 80.0, 10.0, 0.02);
  const int p2 = b.add_var(0.0, 80.0, 8.0, 0.04);
  b.add_eq({{p1, 1.0}, {p2, 1.0}}, 100.0);
  const auto qp = b.build();
  for (bool dense : {false, true}) {
    opt::SolveOptions o;
    o.force_dense = dense;
    const auto s = opt::solve_qp(qp, o);
    REQUIRE(s.status == opt::Status::optimal);
    CHECK(s.x(0) == doctest::Approx(100.0 / 3.0).epsilon(1e-10));
    CHECK(s.x(1) == doctest::Approx(200.0 / 3.0).epsilon(1e-10));
    CHECK(s.kkt_residual <= 1e-8);
  }
}

TEST_CASE("equality system x1 + x2 = 1, x1 - x2 = 3") {
  opt::QpBuilder b;
  const int x1 = b.add_var(-opt::kInf, opt::kInf, 0.0, 1.0);
  const int x2 = b.add_var(-opt::kInf, opt::kInf);
  b.add_eq({{x1, 1.0}, {x2, 1.0}}, 1.0);
  b.add_eq({{x1, 1.0}, {x2, -1.0}}, 3.0);
  auto qp = b.build();
  auto s = opt::solve_qp(qp);
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(s.x(0) == doctest::Approx(2.0));
  CHECK(s.x(1) == doctest::Approx(-1.0));

  qp.lo(1) = 0.0;  // excludes x2 = -1
  s = opt::solve_qp(qp);
  CHECK(s.status == opt::Status::infeasible);
  CHECK(s.infeasibility > 0.5);
}

TEST_CASE("dimension mismatch is rejected") {
  opt::QuadraticProgram p;
  p.q = vec({1.0, 2.0});
  p.q_diag = vec({1.0});
  p.lo = vec({0.0, 0.0});
  p.hi = vec({1.0, 1.0});
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.q_diag = vec({1.0, 1.0});
  p.hi = vec({1.0, -1.0});
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("unbounded linear program is detected") {
  opt::QpBuilder b;
  const int x = b.add_var(0.0, opt::kInf, -1.0);
  const int y = b.add_var(0.0, opt::kInf, -1.0);
  b.add_le({{x, 1.0}, {y, -1.0}}, 1.0);
  b.add_le({{x, -1.0}}, 5.0);
  const auto s = opt::solve_qp(b.build());
  CHECK(s.status == opt::Status::unbounded);
}

TEST_CASE("degenerate linear program terminates at a vertex") {
  // Several constraints meet at the optimum (1, 1).
  opt::QpBuilder b;
  const int x = b.add_var(0.0, 10.0, -1.0);
  const int y = b.add_var(0.0, 10.0, -1.0);
  b.add_le({{x, 1.0}}, 1.0);
  b.add_le({{y, 1.0}}, 1.0);
  b.add_le({{x, 1.0}, {y, 1.0}}, 2.0);
  b.add_le({{x, 2.0}, {y, 1.0}}, 3.0);
  b.add_le({{x, 1.0}, {y, 2.0}}, 3.0);
  const auto s = opt::solve_qp(b.build());
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(s.objective == doctest::Approx(-2.0));
  CHECK(s.kkt_residual <= 1e-8);
}

TEST_CASE("property: random QPs satisfy KKT and both KKT paths agree") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const bool dense = trial % 2 == 1;
    const auto qp = testing::random_qp(rng, dense);
    const auto s = opt::solve_qp(qp);
    INFO("trial " << trial);
    REQUIRE(s.status == opt::Status::optimal);
    CHECK(s.kkt_residual <= 1e-8);
    CHECK(opt::kkt_residual(qp, s.x, s.lambda_eq, s.mu_in) == doctest::Approx(s.kkt_residual));
    if (!dense) {
      opt::SolveOptions o;
      o.force_dense = true;
      const auto t = opt::solve_qp(qp, o);
      REQUIRE(t.status == opt::Status::optimal);
      CHECK(std::abs(t.objective - s.objective) <= 1e-6 * std::max(1.0, std::abs(s.objective)));
    }
  }
}

TEST_CASE("property: adding a constraint never decreases the optimum") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto qp = testing::random_qp(rng, trial % 2 == 0);
    const auto s0 = opt::solve_qp(qp);
    REQUIRE(s0.status == opt::Status::optimal);
    // Cut through the current optimum with a random half-space, keeping feasibility.
    const MatrixXd row = testing::random_matrix(rng, 1, qp.n());
    const double rhs = (row * s0.x)(0) - uniform(rng, 0.0, 0.5);
    const MatrixXd a_in_old = MatrixXd(qp.a_in);
    MatrixXd a_in(a_in_old.rows() + 1, qp.n());
    a_in << a_in_old, row;
    VectorXd b_in(qp.b_in.size() + 1);
    b_in << qp.b_in, rhs;
    qp.a_in = a_in.sparseView();
    qp.b_in = b_in;
    const auto s1 = opt::solve_qp(qp);
    if (s1.status == opt::Status::infeasible) continue;
    REQUIRE(s1.status == opt::Status::optimal);
    CHECK(s1.objective >= s0.objective - 1e-6);
  }
}

TEST_CASE("warm start and bound overrides") {
  opt::QpBuilder b;
  const int p1 = b.add_var(0.0, 80.0, 10.0, 0.02);
  const int p2 = b.add_var(0.0, 80.0, 8.0, 0.04);
  b.add_eq({{p1, 1.0}, {p2, 1.0}}, 100.0);
  const auto qp = b.build();
  const VectorXd x0 = vec({50.0, 50.0});
  const VectorXd hi = vec({80.0, 60.0});
  opt::SolveOptions o;
  o.x0 = &x0;
  o.hi = &hi;
  const auto s = opt::solve_qp(qp, o);
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(s.x(1) == doctest::Approx(60.0));
  CHECK(s.x(0) == doctest::Approx(40.0));
}

TEST_CASE("QP JSON dump reproduces the problem") {
  Rng rng(5);
  const auto qp = testing::random_qp(rng, true);
  const auto again = opt::qp_from_json(opt::qp_to_json(qp));
  CHECK(opt::qp_to_json(again).dump() == opt::qp_to_json(qp).dump());
  CHECK(opt::solve_qp(again).objective == doctest::Approx(opt::solve_qp(qp).objective));
}

TEST_CASE("mixed binary: one storage pair in a deficit hour discharges") {
  // Generator capped below the load; storage discharges at 5 or charges at 50.
  opt::QpBuilder b;
  const int g = b.add_var(0.0, 8.0, 1.0, 0.1);
  const int up = b.add_var(0.0, 5.0, 5.0);
  const int down = b.add_var(0.0, 5.0, 50.0);
  const int vp = b.add_var(0.0, 1.0);
  const int vm = b.add_var(0.0, 1.0);
  b.add_le({{up, 1.0}, {vp, -5.0}}, 0.0);
  b.add_le({{down, 1.0}, {vm, -5.0}}, 0.0);
  b.add_eq({{g, 1.0}, {up, 1.0}, {down, -1.0}}, 10.0);
  opt::MixedBinaryQp p{b.build(), {{vp, vm}}};
  const auto s = opt::solve_mixed_binary(p);
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(s.x(vp) == 1.0);
  CHECK(s.x(vm) == 0.0);
  CHECK(s.x(up) == doctest::Approx(2.0));
  CHECK(s.nodes == 0);
}

TEST_CASE("mixed binary: two pairs match exhaustive enumeration") {
  Rng rng(3);
  const auto inst = testing::random_mixed_binary(rng, 2);
  const auto s = opt::solve_mixed_binary(inst.problem);
  bool feasible = false;
  const double best = testing::enumerate_mixed_binary(inst.problem, feasible);
  REQUIRE(feasible);
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(std::abs(s.objective - best) <= 1e-6);
}

TEST_CASE("mixed binary: integral root relaxation needs no branching") {
  opt::QpBuilder b;
  const int g = b.add_var(0.0, 20.0, 1.0, 0.1);
  const int up = b.add_var(0.0, 5.0, 30.0);
  const int down = b.add_var(0.0, 5.0, 30.0);
  const int vp = b.add_var(0.0, 1.0);
  const int vm = b.add_var(0.0, 1.0);
  b.add_le({{up, 1.0}, {vp, -5.0}}, 0.0);
  b.add_le({{down, 1.0}, {vm, -5.0}}, 0.0);
  b.add_eq({{g, 1.0}, {up, 1.0}, {down, -1.0}}, 10.0);
  const auto s = opt::solve_mixed_binary({b.build(), {{vp, vm}}});
  REQUIRE(s.status == opt::Status::optimal);
  CHECK(s.nodes == 0);
  CHECK(s.x(vp) + s.x(vm) == 1.0);
}

TEST_CASE("property: random mixed-binary instances match enumeration") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int pairs = 1 + static_cast<int>(uniform01(rng) * 8);
    const auto inst = testing::random_mixed_binary(rng, pairs);
    bool feasible = false;
    const double best = testing::enumerate_mixed_binary(inst.problem, feasible);
    const auto s = opt::solve_mixed_binary(inst.problem);
    INFO("trial " << trial << " pairs " << pairs);
    if (!feasible) {
      CHECK(s.status == opt::Status::infeasible);
      continue;
    }
    REQUIRE(s.status == opt::Status::optimal);
    CHECK(std::abs(s.objective - best) <= 1e-6);
    CHECK(s.kkt_residual <= 1e-8);
    for (const auto& [vp, vm] : inst.problem.binary_pairs) {
      CHECK((s.x(vp) == 0.0 || s.x(vp) == 1.0));
      CHECK(s.x(vp) + s.x(vm) == 1.0);
    }
  }
}

TEST_CASE("mixed binary rejects too many pairs") {
  Rng rng(1);
  const auto inst = testing::random_mixed_binary(rng, 4);
  opt::MixedBinaryOptions o;
  o.max_pairs = 3;
  CHECK_THROWS_AS(opt::solve_mixed_binary(inst.problem, o), ValidationError);
}
