#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "costcast/dispatch/dispatch.hpp"
#include "costcast/grid/network.hpp"

namespace costcast::scenario {

struct ScenarioConfig {
  int count = 500;
  double band = 0.10;  // relative half-width of the uniform forecast band
  std::uint64_t seed = 1;
  std::size_t hours = 24;

  void validate() const;
};

/// One (scenario, hour) point of the loss dataset. Hours are 0-based in
/// memory and 1-based in CSV.
struct LossSample {
  int scenario = 0;
  int hour = 0;
  double fep = 0.0;   // (forecast - actual) / actual
  double fepc = 0.0;  // percent
  bool shed_flag = false;
};

/// `count` forecast profiles, each hour drawn uniformly in
/// [(1 - band) y, (1 + band) y] from a generator seeded with cfg.seed.
std::vector<grid::LoadProfile> generate_scenarios(const grid::LoadProfile& actual, const ScenarioConfig& cfg);

/// Solves the dispatch pair for every scenario across `jobs` threads
/// (0 = all). Samples are ordered by (scenario, hour) for any thread count.
std::vector<LossSample> build_loss_dataset(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                           const grid::LoadProfile& actual, const ScenarioConfig& cfg,
                                           const dispatch::DispatchOptions& opts = {}, int jobs = 0);

/// Single-threaded reference of build_loss_dataset.
std::vector<LossSample> build_loss_dataset_serial(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                                  const grid::LoadProfile& actual, const ScenarioConfig& cfg,
                                                  const dispatch::DispatchOptions& opts = {});

/// `scenario,hour,fep,fepc,shed_flag`
std::string loss_dataset_to_csv(const std::vector<LossSample>& samples);
std::vector<LossSample> load_loss_dataset(const std::string& path);

}  // namespace costcast::scenario
