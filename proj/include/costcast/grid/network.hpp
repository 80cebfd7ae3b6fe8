#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace costcast::grid {

struct Generator {
  std::string id;
  int bus = 0;
  double cost_a = 0.0;  // $/MW^2h
  double cost_b = 0.0;  // $/MWh
  double cost_c = 0.0;  // $/h
  double p_max = 0.0;
  double ramp_up = 0.0;    // MW/h
  double ramp_down = 0.0;  // MW/h
  double p_initial = 0.0;

  double cost(double p) const { return (cost_a * p + cost_b) * p + cost_c; }
  double marginal_cost(double p) const { return 2.0 * cost_a * p + cost_b; }
};

struct Line {
  std::string id;
  int from_bus = 0;
  int to_bus = 0;
  double susceptance = 0.0;  // |B| in per unit on the network MVA base
  double flow_limit = 0.0;   // MW
};

/// Battery offering paid balancing in the intraday problem. The "discharge"
/// direction injects power into the grid.
struct Bess {
  std::string id;
  int bus = 0;
  double discharge_max = 0.0;    // MW
  double charge_max = 0.0;       // MW
  double price_discharge = 0.0;  // $/MWh
  double price_charge = 0.0;     // $/MWh
  double energy_initial = 0.0;   // MWh
  double energy_max = 0.0;       // MWh
};

/// Validated, immutable DC network. Bus indices are 0-based.
class Network {
 public:
  Network(int bus_count, int reference_bus, double mva_base, std::vector<Line> lines,
          std::vector<Generator> generators, std::vector<Bess> bess_units,
          std::vector<double> load_fractions);

  int bus_count() const { return bus_count_; }
  int reference_bus() const { return reference_bus_; }
  double mva_base() const { return mva_base_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::vector<Generator>& generators() const { return generators_; }
  const std::vector<Bess>& bess_units() const { return bess_; }
  const std::vector<double>& load_fractions() const { return load_fractions_; }

  /// Generators / batteries attached to each bus.
  const std::vector<std::vector<int>>& gen_bus_map() const { return gen_bus_map_; }
  const std::vector<std::vector<int>>& bess_bus_map() const { return bess_bus_map_; }

  double total_capacity() const;
  double max_balancing_price() const;

 private:
  void validate() const;

  int bus_count_;
  int reference_bus_;
  double mva_base_;
  std::vector<Line> lines_;
  std::vector<Generator> generators_;
  std::vector<Bess> bess_;
  std::vector<double> load_fractions_;
  std::vector<std::vector<int>> gen_bus_map_;
  std::vector<std::vector<int>> bess_bus_map_;
};

/// Parses the network schema; throws ParseError / ValidationError.
Network network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const Network& net);
Network load_network(const std::string& path);

/// Hourly system load; per-bus loads follow the network's load fractions.
struct LoadProfile {
  std::vector<double> system_load;  // MW per hour

  LoadProfile() = default;
  explicit LoadProfile(std::vector<double> load);

  std::size_t hours() const { return system_load.size(); }
  double per_bus(const Network& net, int bus, std::size_t hour) const {
    return system_load[hour] * net.load_fractions()[static_cast<std::size_t>(bus)];
  }
};

/// CSV with header `hour,system_load_mw`; hours are 1-based and contiguous.
LoadProfile load_profile_csv(const std::string& path);
std::string profile_to_csv(const LoadProfile& profile);

}  // namespace costcast::grid
