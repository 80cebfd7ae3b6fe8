#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "costcast/common/rng.hpp"
#include "costcast/forecast/mlr.hpp"

namespace costcast::forecast {

struct AnnOptions {
  std::vector<int> hidden{64, 128, 64};
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;  // added to v-hat inside the square root
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 1;
  /// Abort when the epoch loss rises this many epochs in a row.
  int divergence_window = 50;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Feed-forward ReLU network with a linear output. Inputs are standardised
/// with the training-set mean and scale; the output is multiplied by
/// output_scale (the training-set mean load).
struct AnnModel {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps width l-1 to width l (rows = outputs)
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_mean, input_scale;
  double output_scale = 1.0;
  std::string feature_fingerprint;
  nlohmann::json training;

  /// Scaled-uniform weights in +/- sqrt(6 / (fan_in + fan_out)), zero biases,
  /// identity input transform.
  static AnnModel initialize(int inputs, const std::vector<int>& hidden, Rng& rng);

  int inputs() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

  /// All weights then biases, layer by layer (column-major within a matrix).
  std::size_t parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);
};

/// Sum of L_hour(eps) over the selected rows (all when `rows` is null) and
/// its gradient with respect to parameters(), by backpropagation.
Objective ann_objective(const AnnModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<int>& hours, const lossfit::LossVariant& loss,
                        const std::vector<Eigen::Index>* rows = nullptr);

struct AdamState {
  Eigen::VectorXd m, v;
  long t = 0;
};

/// Advances the moments with gradient g and returns the parameter change
/// -alpha * m_hat / sqrt(v_hat + eps_adam).
Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& g, const AnnOptions& opts);

/// Mini-batch Adam. Each epoch shuffles the rows with a generator seeded from
/// opts.seed and trains every batch, including a final smaller one.
AnnModel train_ann(const Dataset& data, const lossfit::LossVariant& loss, const AnnOptions& opts = {},
                   TrainingLog* log = nullptr);

}  // namespace costcast::forecast
