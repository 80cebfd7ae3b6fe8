#include <cmath>

#include "doctest.h"

#include "costcast/common/errors.hpp"
#include "costcast/common/rng.hpp"
#include "costcast/grid/flow_model.hpp"
#include "costcast/grid/network.hpp"

using namespace costcast;
using nlohmann::json;

namespace {

json two_bus_json() {
  return json::parse(R"({
    "buses": 2, "reference_bus": 0, "mva_base": 1.0,
    "lines": [{"id": "L1", "from_bus": 0, "to_bus": 1, "susceptance": 10.0, "flow_limit": 100.0}],
    "generators": [{"id": "G1", "bus": 0, "cost_a": 0.01, "cost_b": 10.0, "cost_c": 0.0, "p_max": 80.0,
                    "ramp_up": 80.0, "ramp_down": 80.0, "p_initial": 0.0}],
    "bess": [],
    "load_fractions": [0.0, 1.0]
  })");
}

json three_bus_ring() {
  json j = two_bus_json();
  j["buses"] = 3;
  j["lines"] = json::array({{{"from_bus", 0}, {"to_bus", 1}, {"susceptance", 5.0}, {"flow_limit", 50.0}},
                            {{"from_bus", 1}, {"to_bus", 2}, {"susceptance", 5.0}, {"flow_limit", 50.0}},
                            {{"from_bus", 2}, {"to_bus", 0}, {"susceptance", 5.0}, {"flow_limit", 50.0}}});
  j["load_fractions"] = {0.0, 0.5, 0.5};
  return j;
}

std::string error_of(const json& j) {
  try {
    grid::network_from_json(j);
  } catch (const ValidationError& e) {
    return e.what();
  } catch (const ParseError& e) {
    return std::string("parse: ") + e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("shipped 30-bus network loads with its documented counts") {
  const auto net = grid::load_network(std::string(COSTCAST_SOURCE_DIR) + "/data/network.json");
  CHECK(net.bus_count() == 30);
  CHECK(net.generators().size() == 6);
  CHECK(net.bess_units().size() == 3);
  int loads = 0;
  for (double f : net.load_fractions()) loads += f > 0.0;
  CHECK(loads == 21);
  CHECK(net.lines().size() == 41);
}

TEST_CASE("minimal two-bus network is valid") {
  const auto net = grid::network_from_json(two_bus_json());
  CHECK(net.bus_count() == 2);
  CHECK(net.gen_bus_map()[0] == std::vector<int>{0});
  CHECK(net.gen_bus_map()[1].empty());
}

TEST_CASE("validation errors name the offending field") {
  json j = two_bus_json();
  j["load_fractions"] = {0.0, 0.9};
  CHECK(error_of(j).find("load_fractions") != std::string::npos);

  j = three_bus_ring();
  j["lines"].erase(1);
  j["lines"].erase(1);
  CHECK(error_of(j).find("disconnected") != std::string::npos);

  j = two_bus_json();
  j["generators"][0]["p_max"] = -1.0;
  CHECK(error_of(j).find("generators[0].p_max") != std::string::npos);

  j = two_bus_json();
  j["generators"][0]["bus"] = 7;
  CHECK(error_of(j).find("generators[0].bus") != std::string::npos);

  j = two_bus_json();
  j["lines"][0]["to_bus"] = 0;
  CHECK(error_of(j).find("lines[0].to_bus") != std::string::npos);

  j = two_bus_json();
  j.erase("lines");
  CHECK(error_of(j).rfind("parse:", 0) == 0);
}

TEST_CASE("malformed network file is a parse error") {
  CHECK_THROWS_AS(grid::load_network("/nonexistent/network.json"), NotFoundError);
}

TEST_CASE("two-bus flow: 5 MW transfer over B = 10") {
  const auto net = grid::network_from_json(two_bus_json());
  const auto fm = grid::ptdf_free_flow_model(net);
  Eigen::VectorXd inj(2);
  inj << 5.0, -5.0;
  const auto theta = fm.angles(inj);
  const auto f = fm.flows(inj);
  CHECK(f(0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(theta(0) - theta(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(theta(0) == 0.0);
}

TEST_CASE("zero injections give zero flows and angles") {
  const auto net = grid::network_from_json(three_bus_ring());
  const auto fm = grid::ptdf_free_flow_model(net);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(fm.angles(zero).cwiseAbs().maxCoeff() == 0.0);
  CHECK(fm.flows(zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three-bus ring matches a dense linear-system oracle") {
  const auto net = grid::network_from_json(three_bus_ring());
  const auto fm = grid::ptdf_free_flow_model(net);
  Eigen::VectorXd inj(3);
  inj << 1.0, -1.0, 0.0;

  // Oracle: full nodal susceptance system with the reference equation replaced by theta_0 = 0.
  Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(3, 3);
  for (const auto& l : net.lines()) {
    const double b = l.susceptance * net.mva_base();
    bbus(l.from_bus, l.from_bus) += b;
    bbus(l.to_bus, l.to_bus) += b;
    bbus(l.from_bus, l.to_bus) -= b;
    bbus(l.to_bus, l.from_bus) -= b;
  }
  Eigen::MatrixXd sys = bbus;
  Eigen::VectorXd rhs = inj;
  sys.row(0).setZero();
  sys(0, 0) = 1.0;
  rhs(0) = 0.0;
  const Eigen::VectorXd theta = sys.fullPivLu().solve(rhs);
  Eigen::VectorXd expected(3);
  for (int l = 0; l < 3; ++l) {
    const auto& ln = net.lines()[static_cast<std::size_t>(l)];
    expected(l) = net.mva_base() * ln.susceptance * (theta(ln.from_bus) - theta(ln.to_bus));
  }
  const Eigen::VectorXd f = fm.flows(inj);
  CHECK((f - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(f(0) == doctest::Approx(2.0 / 3.0));
  CHECK((fm.ptdf() * inj - f).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("property: nodal balance, reference angle and load reconstruction on the 30-bus network") {
  const auto net = grid::load_network(std::string(COSTCAST_SOURCE_DIR) + "/data/network.json");
  const auto fm = grid::ptdf_free_flow_model(net);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd inj(30);
    for (int k = 0; k < 30; ++k) inj(k) = uniform(rng, -20.0, 20.0);
    inj(net.reference_bus()) -= inj.sum();
    const auto theta = fm.angles(inj);
    CHECK(theta(net.reference_bus()) == 0.0);
    const auto f = fm.flows_from_angles(theta);
    CHECK(fm.balance_residual(inj, f).cwiseAbs().maxCoeff() <= 1e-9);

    const grid::LoadProfile profile(std::vector<double>{uniform(rng, 100.0, 300.0)});
    double sum = 0.0;
    for (int k = 0; k < 30; ++k) sum += profile.per_bus(net, k, 0);
    CHECK(std::abs(sum - profile.system_load[0]) <= 1e-9);
  }
}

TEST_CASE("network JSON round-trips") {
  const auto net = grid::network_from_json(three_bus_ring());
  const auto again = grid::network_from_json(grid::network_to_json(net));
  CHECK(grid::network_to_json(again).dump() == grid::network_to_json(net).dump());
}

TEST_CASE("load profile rejects non-positive hours") {
  CHECK_THROWS_AS(grid::LoadProfile(std::vector<double>{100.0, 0.0}), ValidationError);
}
