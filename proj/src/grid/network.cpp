#include "costcast/grid/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"

namespace costcast::grid {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ValidationError(field + ": " + why);
}

}  // namespace

Network::Network(int bus_count, int reference_bus, double mva_base, std::vector<Line> lines,
                 std::vector<Generator> generators, std::vector<Bess> bess_units,
                 std::vector<double> load_fractions)
    : bus_count_(bus_count),
      reference_bus_(reference_bus),
      mva_base_(mva_base),
      lines_(std::move(lines)),
      generators_(std::move(generators)),
      bess_(std::move(bess_units)),
      load_fractions_(std::move(load_fractions)) {
  validate();
  gen_bus_map_.assign(static_cast<std::size_t>(bus_count_), {});
  bess_bus_map_.assign(static_cast<std::size_t>(bus_count_), {});
  for (std::size_t j = 0; j < generators_.size(); ++j)
    gen_bus_map_[static_cast<std::size_t>(generators_[j].bus)].push_back(static_cast<int>(j));
  for (std::size_t x = 0; x < bess_.size(); ++x)
    bess_bus_map_[static_cast<std::size_t>(bess_[x].bus)].push_back(static_cast<int>(x));
}

void Network::validate() const {
  if (bus_count_ < 1) fail("buses", "must be at least 1");
  if (reference_bus_ < 0 || reference_bus_ >= bus_count_) fail("reference_bus", "out of range");
  if (!(mva_base_ > 0.0)) fail("mva_base", "must be positive");
  auto bus_ok = [&](int b) { return b >= 0 && b < bus_count_; };

  for (std::size_t l = 0; l < lines_.size(); ++l) {
    const auto& ln = lines_[l];
    const std::string f = "lines[" + std::to_string(l) + "]";
    if (!bus_ok(ln.from_bus)) fail(f + ".from_bus", "out of range");
    if (!bus_ok(ln.to_bus)) fail(f + ".to_bus", "out of range");
    if (ln.from_bus == ln.to_bus) fail(f + ".to_bus", "equals from_bus");
    if (!(ln.susceptance > 0.0)) fail(f + ".susceptance", "must be positive");
    if (!(ln.flow_limit > 0.0)) fail(f + ".flow_limit", "must be positive");
  }
  if (generators_.empty()) fail("generators", "at least one generator is required");
  for (std::size_t j = 0; j < generators_.size(); ++j) {
    const auto& g = generators_[j];
    const std::string f = "generators[" + std::to_string(j) + "]";
    if (!bus_ok(g.bus)) fail(f + ".bus", "out of range");
    if (!(g.cost_a >= 0.0)) fail(f + ".cost_a", "must be non-negative (convex cost)");
    if (!std::isfinite(g.cost_b) || !std::isfinite(g.cost_c)) fail(f + ".cost_b", "must be finite");
    if (!(g.p_max >= 0.0)) fail(f + ".p_max", "must be non-negative");
    if (!(g.p_initial >= 0.0 && g.p_initial <= g.p_max)) fail(f + ".p_initial", "must lie in [0, p_max]");
    if (!(g.ramp_up > 0.0)) fail(f + ".ramp_up", "must be positive");
    if (!(g.ramp_down > 0.0)) fail(f + ".ramp_down", "must be positive");
  }
  for (std::size_t x = 0; x < bess_.size(); ++x) {
    const auto& b = bess_[x];
    const std::string f = "bess[" + std::to_string(x) + "]";
    if (!bus_ok(b.bus)) fail(f + ".bus", "out of range");
    if (!(b.discharge_max > 0.0)) fail(f + ".discharge_max", "must be positive");
    if (!(b.charge_max > 0.0)) fail(f + ".charge_max", "must be positive");
    if (!(b.price_discharge >= 0.0)) fail(f + ".price_discharge", "must be non-negative");
    if (!(b.price_charge >= 0.0)) fail(f + ".price_charge", "must be non-negative");
    if (!(b.energy_max >= 0.0)) fail(f + ".energy_max", "must be non-negative");
    if (!(b.energy_initial >= 0.0 && b.energy_initial <= b.energy_max))
      fail(f + ".energy_initial", "must lie in [0, energy_max]");
  }
  if (load_fractions_.size() != static_cast<std::size_t>(bus_count_))
    fail("load_fractions", "expected one entry per bus");
  double sum = 0.0;
  for (double v : load_fractions_) {
    if (!(v >= 0.0)) fail("load_fractions", "entries must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) fail("load_fractions", "must sum to 1 (got " + csv::format_double(sum) + ")");

  // Connectivity by breadth-first search from the reference bus.
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(bus_count_));
  for (const auto& ln : lines_) {
    adj[static_cast<std::size_t>(ln.from_bus)].push_back(ln.to_bus);
    adj[static_cast<std::size_t>(ln.to_bus)].push_back(ln.from_bus);
  }
  std::vector<char> seen(static_cast<std::size_t>(bus_count_), 0);
  std::queue<int> q;
  q.push(reference_bus_);
  seen[static_cast<std::size_t>(reference_bus_)] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int b = q.front();
    q.pop();
    for (int n : adj[static_cast<std::size_t>(b)])
      if (!seen[static_cast<std::size_t>(n)]) {
        seen[static_cast<std::size_t>(n)] = 1;
        ++reached;
        q.push(n);
      }
  }
  if (reached != bus_count_)
    fail("lines", "network graph is disconnected (" + std::to_string(bus_count_ - reached) +
                      " buses unreachable from the reference bus)");
}

double Network::total_capacity() const {
  double s = 0.0;
  for (const auto& g : generators_) s += g.p_max;
  return s;
}

double Network::max_balancing_price() const {
  double m = 0.0;
  for (const auto& b : bess_) m = std::max({m, b.price_discharge, b.price_charge});
  return m;
}

namespace {

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

const nlohmann::json& array_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw ParseError(std::string("network: missing array '") + key + "'");
  return j.at(key);
}

}  // namespace

Network network_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("network: top level must be an object");
  const int buses = field<int>(j, "buses", "network");
  const int ref = field<int>(j, "reference_bus", "network");
  const double base = j.contains("mva_base") ? field<double>(j, "mva_base", "network") : 100.0;

  std::vector<Line> lines;
  const auto& jl = array_field(j, "lines");
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const std::string w = "lines[" + std::to_string(i) + "]";
    const auto& e = jl[i];
    lines.push_back({e.value("id", "L" + std::to_string(i)), field<int>(e, "from_bus", w),
                     field<int>(e, "to_bus", w), field<double>(e, "susceptance", w),
                     field<double>(e, "flow_limit", w)});
  }
  std::vector<Generator> gens;
  const auto& jg = array_field(j, "generators");
  for (std::size_t i = 0; i < jg.size(); ++i) {
    const std::string w = "generators[" + std::to_string(i) + "]";
    const auto& e = jg[i];
    gens.push_back({e.value("id", "G" + std::to_string(i)), field<int>(e, "bus", w),
                    field<double>(e, "cost_a", w), field<double>(e, "cost_b", w),
                    field<double>(e, "cost_c", w), field<double>(e, "p_max", w),
                    field<double>(e, "ramp_up", w), field<double>(e, "ramp_down", w),
                    field<double>(e, "p_initial", w)});
  }
  std::vector<Bess> bess;
  if (j.contains("bess")) {
    const auto& jb = array_field(j, "bess");
    for (std::size_t i = 0; i < jb.size(); ++i) {
      const std::string w = "bess[" + std::to_string(i) + "]";
      const auto& e = jb[i];
      bess.push_back({e.value("id", "B" + std::to_string(i)), field<int>(e, "bus", w),
                      field<double>(e, "discharge_max", w), field<double>(e, "charge_max", w),
                      field<double>(e, "price_discharge", w), field<double>(e, "price_charge", w),
                      field<double>(e, "energy_initial", w), field<double>(e, "energy_max", w)});
    }
  }
  auto fractions = field<std::vector<double>>(j, "load_fractions", "network");
  return Network(buses, ref, base, std::move(lines), std::move(gens), std::move(bess),
                 std::move(fractions));
}

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json j;
  j["buses"] = net.bus_count();
  j["reference_bus"] = net.reference_bus();
  j["mva_base"] = net.mva_base();
  j["lines"] = nlohmann::json::array();
  for (const auto& l : net.lines())
    j["lines"].push_back({{"id", l.id}, {"from_bus", l.from_bus}, {"to_bus", l.to_bus},
                          {"susceptance", l.susceptance}, {"flow_limit", l.flow_limit}});
  j["generators"] = nlohmann::json::array();
  for (const auto& g : net.generators())
    j["generators"].push_back({{"id", g.id}, {"bus", g.bus}, {"cost_a", g.cost_a},
                               {"cost_b", g.cost_b}, {"cost_c", g.cost_c}, {"p_max", g.p_max},
                               {"ramp_up", g.ramp_up}, {"ramp_down", g.ramp_down},
                               {"p_initial", g.p_initial}});
  j["bess"] = nlohmann::json::array();
  for (const auto& b : net.bess_units())
    j["bess"].push_back({{"id", b.id}, {"bus", b.bus}, {"discharge_max", b.discharge_max},
                         {"charge_max", b.charge_max}, {"price_discharge", b.price_discharge},
                         {"price_charge", b.price_charge}, {"energy_initial", b.energy_initial},
                         {"energy_max", b.energy_max}});
  j["load_fractions"] = net.load_fractions();
  return j;
}

Network load_network(const std::string& path) {
  const std::string text = csv::read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return network_from_json(j);
}

LoadProfile::LoadProfile(std::vector<double> load) : system_load(std::move(load)) {
  if (system_load.empty()) throw ValidationError("system_load: profile is empty");
  for (std::size_t i = 0; i < system_load.size(); ++i)
    if (!(system_load[i] > 0.0) || !std::isfinite(system_load[i]))
      throw ValidationError("system_load[" + std::to_string(i) + "]: must be positive and finite");
}

LoadProfile load_profile_csv(const std::string& path) {
  const auto t = csv::read(path);
  const auto hc = t.column("hour");
  const auto lc = t.column("system_load_mw");
  std::vector<double> load;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto h = csv::parse_int(t.rows[r][hc], path);
    if (h != static_cast<long long>(r) + 1)
      throw ParseError(path + ": hours must be 1..N in order (row " + std::to_string(r + 1) + ")");
    load.push_back(csv::parse_double(t.rows[r][lc], path));
  }
  return LoadProfile(std::move(load));
}

std::string profile_to_csv(const LoadProfile& profile) {
  csv::Writer w({"hour", "system_load_mw"});
  for (std::size_t i = 0; i < profile.hours(); ++i)
    w.row({std::to_string(i + 1), csv::format_double(profile.system_load[i])});
  return w.str();
}

}  // namespace costcast::grid
