#pragma once

#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "costcast/forecast/ann.hpp"
#include "costcast/forecast/mlr.hpp"

namespace costcast::forecast {

enum class ModelKind { mlr, ann };
std::string to_string(ModelKind k);
/// Throws UsageError for unknown names.
ModelKind model_kind_from_string(const std::string& s);

/// Either trained model, with uniform prediction and persistence.
class TrainedModel {
 public:
  TrainedModel(MlrModel m) : model_(std::move(m)) {}
  TrainedModel(AnnModel m) : model_(std::move(m)) {}

  ModelKind kind() const { return std::holds_alternative<MlrModel>(model_) ? ModelKind::mlr : ModelKind::ann; }
  const std::string& feature_fingerprint() const;
  const nlohmann::json& training() const;
  nlohmann::json& training();

  const MlrModel* mlr() const { return std::get_if<MlrModel>(&model_); }
  const AnnModel* ann() const { return std::get_if<AnnModel>(&model_); }

  /// Throws ValidationError when the dataset was built with another feature layout.
  Eigen::VectorXd predict(const Dataset& data) const;

 private:
  std::variant<MlrModel, AnnModel> model_;
};

/// Matrices are stored row-major as {"rows", "cols", "data"}.
nlohmann::json to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const TrainedModel& m);
/// Throws NotFoundError when the file does not exist.
TrainedModel load_model(const std::string& path);

}  // namespace costcast::forecast
