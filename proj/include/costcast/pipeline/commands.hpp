#pragma once

#include <string>
#include <vector>

#include "costcast/forecast/model.hpp"
#include "costcast/lossfit/variant.hpp"
#include "costcast/metrics/metrics.hpp"
#include "costcast/pipeline/config.hpp"

namespace costcast::pipeline {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitValidation = 3,  // also malformed input files
  kExitInfeasible = 4,
  kExitDivergence = 5,
  kExitNotFound = 6,
};

/// Pipeline stages. Each writes its artifacts under cfg.paths.output_dir and
/// returns the written paths. JSON artifacts embed a "provenance" block with
/// the config hash and seed; every CSV gets a `<name>.meta.json` sidecar
/// carrying the same block.

/// Synthetic hourly history written to cfg.paths.history.
std::vector<std::string> cmd_synth_data(const PipelineConfig& cfg);

/// `lossdata.csv` (scenario,hour,fep,fepc,shed_flag) and its sidecar with
/// seed, counts and solver settings.
std::vector<std::string> cmd_gen_losses(const PipelineConfig& cfg);

/// `loss_<kind>.json` and `loss_<kind>_curve.csv`, which samples every
/// function on a 400-point grid (function,hour,fep,loss).
std::vector<std::string> cmd_fit_loss(const PipelineConfig& cfg, lossfit::LossKind kind);

/// Loads "mse", a loss kind name (resolved to `loss_<kind>.json` in the
/// output directory) or a path to a loss-function file.
lossfit::LossVariant resolve_loss(const PipelineConfig& cfg, const std::string& loss, std::string* name = nullptr);

/// Stable identifier of a loss variant's content.
std::string loss_fingerprint(const lossfit::LossVariant& v);

/// `model_<kind>_<loss>.json` plus the training log `model_<kind>_<loss>_log.csv`.
std::vector<std::string> cmd_train(const PipelineConfig& cfg, forecast::ModelKind kind, const std::string& loss);

/// Train and test feature sets from the configured history and split.
struct SplitData {
  forecast::Dataset train, test;
};
SplitData load_split(const PipelineConfig& cfg);

/// Groups consecutive rows into complete calendar days (hour 0 to 23).
std::vector<metrics::DayPair> group_days(const forecast::Dataset& data, const Eigen::VectorXd& predictions);

struct ModelReport {
  std::string name;   // model file stem without the `model_` prefix
  std::string model;  // mlr or ann
  std::string loss;   // loss kind used in training
  metrics::EvaluationReport report;
};

struct EvaluationResult {
  std::vector<std::string> files;
  std::vector<ModelReport> reports;
};

/// Per-model `report_<name>.csv`, `comparison.csv`
/// (name,model,loss,mfepc,mape,ofp,ufp,n,excluded_days) and the tidy plot file
/// `plot_hourly.csv` (name,hour,metric,value).
EvaluationResult cmd_evaluate(const PipelineConfig& cfg, const std::vector<std::string>& model_files);

}  // namespace costcast::pipeline
