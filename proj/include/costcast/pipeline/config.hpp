#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "costcast/forecast/ann.hpp"
#include "costcast/forecast/features.hpp"
#include "costcast/forecast/mlr.hpp"
#include "costcast/forecast/synthetic.hpp"
#include "costcast/lossfit/variant.hpp"
#include "costcast/scenario/scenario.hpp"

namespace costcast::pipeline {

struct Paths {
  std::string network = "data/network.json";
  std::string loads = "data/typical_day.csv";     // actual day for loss simulation
  std::string history = "data/history.csv";       // hourly load and temperature
  std::string output_dir = "out";
};

/// Train on [train_start, train_end), test on [train_end, test_end).
struct Split {
  std::string train_start = "2019-01-01";
  std::string train_end = "2021-01-01";
  std::string test_end = "2021-07-01";
};

struct PipelineConfig {
  Paths paths;
  scenario::ScenarioConfig scenario;
  double reserve_fraction = 0.025;
  lossfit::FitOptions loss_fit;
  forecast::FeatureConfig features;
  forecast::MlrOptions mlr;
  forecast::AnnOptions ann;
  forecast::SyntheticConfig synthetic;
  Split split;
  std::uint64_t seed = 7;
  int jobs = 0;

  /// Relative paths are resolved against this directory.
  std::string base_dir = ".";

  std::string resolve(const std::string& path) const;
  std::string output(const std::string& name) const;

  /// Checks field ranges and split ordering. With `check_inputs`, also that
  /// the referenced network, loads and history files exist.
  void validate(bool check_inputs = false) const;

  /// Sets the run seed, which also seeds the scenarios and the ANN.
  void set_seed(std::uint64_t s);

  /// Effective settings; `jobs`, `base_dir` and `paths.output_dir` are left
  /// out because they do not change results.
  nlohmann::json to_json() const;
  /// Fingerprint of to_json().
  std::string hash() const;
  /// {"config_hash", "seed"} block stamped into every artifact.
  nlohmann::json provenance() const;
};

/// Missing keys keep their defaults; unknown keys raise ParseError.
PipelineConfig config_from_json(const nlohmann::json& j);
/// Throws NotFoundError when the file does not exist.
PipelineConfig load_config(const std::string& path);

}  // namespace costcast::pipeline
