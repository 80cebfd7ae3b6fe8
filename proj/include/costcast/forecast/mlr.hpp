#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "costcast/forecast/features.hpp"
#include "costcast/lossfit/variant.hpp"

namespace costcast::forecast {

/// Per-iteration (MLR) or per-epoch (ANN) training trace.
struct TrainingLog {
  std::vector<int> iteration;
  std::vector<double> loss;
  std::vector<double> grad_norm;

  void add(int it, double l, double g);
  /// `iteration,loss,grad_norm`
  std::string to_csv() const;
};

/// Sum over samples of L_hour(eps) and its gradient.
struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Objective of yhat = w0 + x w[1:] with eps = (yhat - y) / y. Each sample
/// uses the loss function of its calendar hour. Blocked OpenMP reduction;
/// the result does not depend on the thread count.
Objective mlr_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hours,
                        const lossfit::LossVariant& loss, const Eigen::VectorXd& w, int jobs = 0);
/// Single-threaded reference of mlr_objective.
Objective mlr_objective_serial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hours,
                               const lossfit::LossVariant& loss, const Eigen::VectorXd& w);

/// Typical second derivative of the loss: 2 for mse, otherwise the mean over
/// functions of (a_K - a_1) / (hi - lo).
double loss_curvature_scale(const lossfit::LossVariant& loss);

enum class LrSchedule {
  inverse_time,  // eta_t = eta0 / (1 + gamma t)
  recursive,     // eta_{t+1} = eta_t / (1 + gamma t)
};

struct MlrOptions {
  double eta0 = 0.5;
  double gamma = 0.1;
  int max_iterations = 2000;
  double grad_tol = 1e-8;
  LrSchedule schedule = LrSchedule::inverse_time;
  /// Train on whitened features and y / mean(y); weights are mapped back to
  /// raw feature space afterwards. Off = the plain update on raw features.
  bool whiten = true;
  /// Scale steps by 2 / loss_curvature_scale(loss) (1 for mse).
  bool normalize_step = true;
  /// Abort when the objective rises this many iterations in a row.
  int divergence_window = 50;
  int jobs = 0;

  nlohmann::json to_json() const;
};

/// Learning rate at iteration t (0-based).
double learning_rate(const MlrOptions& opts, int t);

struct MlrModel {
  Eigen::VectorXd weights;  // bias first, then one weight per feature
  std::string feature_fingerprint;
  nlohmann::json training;  // loss kind and fingerprint, options, iterations

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Gradient descent w <- w - eta_t * step_scale * grad / n from w = 0.
/// Throws DivergenceError on a non-finite objective or a sustained rise.
MlrModel train_mlr(const Dataset& data, const lossfit::LossVariant& loss, const MlrOptions& opts = {},
                   TrainingLog* log = nullptr);

}  // namespace costcast::forecast
