#include "costcast/forecast/model.hpp"

#include <filesystem>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"

namespace costcast::forecast {

std::string to_string(ModelKind k) { return k == ModelKind::mlr ? "mlr" : "ann"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "mlr") return ModelKind::mlr;
  if (s == "ann") return ModelKind::ann;
  throw UsageError("unknown model kind '" + s + "' (expected mlr or ann)");
}

const std::string& TrainedModel::feature_fingerprint() const {
  return std::visit([](const auto& m) -> const std::string& { return m.feature_fingerprint; }, model_);
}

const nlohmann::json& TrainedModel::training() const {
  return std::visit([](const auto& m) -> const nlohmann::json& { return m.training; }, model_);
}

nlohmann::json& TrainedModel::training() {
  return std::visit([](auto& m) -> nlohmann::json& { return m.training; }, model_);
}

Eigen::VectorXd TrainedModel::predict(const Dataset& data) const {
  if (data.fingerprint != feature_fingerprint())
    throw ValidationError("model was trained on feature layout " + feature_fingerprint() + " but the data uses " +
                          data.fingerprint);
  return std::visit([&](const auto& m) { return m.predict(data.x); }, model_);
}

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ParseError("model: matrix data has the wrong size");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  return m;
}

}  // namespace

nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["kind"] = to_string(model.kind());
  j["feature_fingerprint"] = model.feature_fingerprint();
  j["training"] = model.training();
  if (const auto* m = model.mlr()) {
    j["weights"] = vector_json(m->weights);
  } else {
    const auto* a = model.ann();
    j["input_mean"] = vector_json(a->input_mean);
    j["input_scale"] = vector_json(a->input_scale);
    j["output_scale"] = a->output_scale;
    j["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < a->weights.size(); ++l)
      j["layers"].push_back({{"weights", matrix_json(a->weights[l])}, {"bias", vector_json(a->biases[l])}});
  }
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
    if (kind == ModelKind::mlr) {
      MlrModel m;
      m.weights = vector_from(j.at("weights"));
      if (m.weights.size() < 1 || !m.weights.allFinite()) throw ValidationError("model: invalid MLR weights");
      m.feature_fingerprint = j.at("feature_fingerprint").get<std::string>();
      m.training = j.value("training", nlohmann::json::object());
      return TrainedModel(std::move(m));
    }
    AnnModel a;
    a.input_mean = vector_from(j.at("input_mean"));
    a.input_scale = vector_from(j.at("input_scale"));
    a.output_scale = j.at("output_scale").get<double>();
    Eigen::Index width = a.input_mean.size();
    for (const auto& layer : j.at("layers")) {
      a.weights.push_back(matrix_from(layer.at("weights")));
      a.biases.push_back(vector_from(layer.at("bias")));
      if (a.weights.back().cols() != width || a.biases.back().size() != a.weights.back().rows())
        throw ValidationError("model: ANN layer shapes do not chain");
      width = a.weights.back().rows();
    }
    if (a.weights.empty() || width != 1 || a.input_scale.size() != a.input_mean.size())
      throw ValidationError("model: ANN must map its inputs to a single output");
    a.feature_fingerprint = j.at("feature_fingerprint").get<std::string>();
    a.training = j.value("training", nlohmann::json::object());
    return TrainedModel(std::move(a));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  } catch (const UsageError& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

void save_model(const std::string& path, const TrainedModel& m) { csv::write_text(path, to_json(m).dump(1) + "\n"); }

TrainedModel load_model(const std::string& path) {
  if (!std::filesystem::exists(path)) throw NotFoundError("model file not found: " + path);
  try {
    return model_from_json(nlohmann::json::parse(csv::read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model " + path + ": " + e.what());
  }
}

}  // namespace costcast::forecast
