#include "costcast/pipeline/commands.hpp"

#include <filesystem>
#include <map>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/common/hash.hpp"
#include "costcast/forecast/synthetic.hpp"
#include "costcast/grid/network.hpp"
#include "costcast/scenario/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace costcast::pipeline {

namespace {

constexpr int kCurvePoints = 400;
constexpr std::size_t kMinSamplesPerFit = 10;

std::string fmt(double v) { return csv::format_double(v); }

void write_json(const std::string& path, const json& j) { csv::write_text(path, j.dump(1) + "\n"); }

// Writes `<csv>.meta.json` with the provenance block and stage details.
std::string write_sidecar(const PipelineConfig& cfg, const std::string& csv_path, json extra = json::object()) {
  json j = {{"file", fs::path(csv_path).filename().string()}, {"provenance", cfg.provenance()}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  const std::string path = csv_path + ".meta.json";
  write_json(path, j);
  return path;
}

std::string file_fingerprint(const std::string& path) { return fingerprint(csv::read_text(path)); }

dispatch::ReserveConfig reserve_for(const PipelineConfig& cfg, const grid::Network& net, std::size_t hours) {
  return dispatch::ReserveConfig::fraction_of_capacity(net, hours, cfg.reserve_fraction);
}

void check_sample_counts(const std::vector<scenario::LossSample>& samples, lossfit::LossKind kind,
                         const lossfit::FitOptions& opts) {
  std::map<int, std::size_t> per_hour;
  std::size_t pooled = 0;
  for (const auto& s : samples) {
    if (s.shed_flag && !opts.include_shed) continue;
    ++per_hour[s.hour];
    ++pooled;
  }
  if (kind == lossfit::LossKind::hourly) {
    for (const auto& [hour, n] : per_hour)
      if (n < kMinSamplesPerFit)
        throw ValidationError("fit-loss: hour " + std::to_string(hour + 1) + " has " + std::to_string(n) +
                              " usable samples; the hourly fit needs at least " + std::to_string(kMinSamplesPerFit));
  } else if (pooled < kMinSamplesPerFit) {
    throw ValidationError("fit-loss: " + std::to_string(pooled) + " usable samples; at least " +
                          std::to_string(kMinSamplesPerFit) + " are needed");
  }
}

}  // namespace

std::vector<std::string> cmd_synth_data(const PipelineConfig& cfg) {
  const auto series = forecast::generate_synthetic(cfg.synthetic);
  const std::string path = cfg.resolve(cfg.paths.history);
  csv::write_text(path, forecast::series_to_csv(series));
  const auto meta = write_sidecar(cfg, path,
                                  {{"rows", series.size()},
                                   {"start", forecast::format_stamp(series.start)},
                                   {"synthetic_seed", cfg.synthetic.seed}});
  return {path, meta};
}

std::vector<std::string> cmd_gen_losses(const PipelineConfig& cfg) {
  cfg.validate();
  const std::string net_path = cfg.resolve(cfg.paths.network), load_path = cfg.resolve(cfg.paths.loads);
  const auto net = grid::load_network(net_path);
  const auto actual = grid::load_profile_csv(load_path);
  auto sc = cfg.scenario;
  sc.hours = actual.hours();
  const dispatch::DispatchOptions dopts;
  const auto samples =
      scenario::build_loss_dataset(net, reserve_for(cfg, net, actual.hours()), actual, sc, dopts, cfg.jobs);

  const std::string path = cfg.output("lossdata.csv");
  csv::write_text(path, scenario::loss_dataset_to_csv(samples));
  std::size_t shed = 0;
  for (const auto& s : samples) shed += s.shed_flag ? 1 : 0;
  const auto meta = write_sidecar(
      cfg, path,
      {{"scenarios", sc.count},
       {"band", sc.band},
       {"scenario_seed", sc.seed},
       {"hours", sc.hours},
       {"rows", samples.size()},
       {"shed_rows", shed},
       {"reserve_fraction", cfg.reserve_fraction},
       {"solver", {{"tol", dopts.tol}, {"voll", dispatch::effective_voll(net, dopts)}, {"max_binary_pairs", dopts.max_binary_pairs}}},
       {"network_fingerprint", file_fingerprint(net_path)},
       {"loads_fingerprint", file_fingerprint(load_path)}});
  return {path, meta};
}

std::vector<std::string> cmd_fit_loss(const PipelineConfig& cfg, lossfit::LossKind kind) {
  cfg.validate();
  const std::string data_path = cfg.output("lossdata.csv");
  lossfit::LossVariant v;
  if (kind != lossfit::LossKind::mse) {
    const auto samples = scenario::load_loss_dataset(data_path);
    check_sample_counts(samples, kind, cfg.loss_fit);
    v = lossfit::fit_variant(samples, kind, cfg.loss_fit);
  }
  const std::string name = lossfit::to_string(kind);
  const std::string path = cfg.output("loss_" + name + ".json");
  json j = lossfit::to_json(v);
  j["fingerprint"] = loss_fingerprint(v);
  j["provenance"] = cfg.provenance();
  if (kind != lossfit::LossKind::mse) j["lossdata_fingerprint"] = file_fingerprint(data_path);
  write_json(path, j);

  csv::Writer w({"function", "hour", "fep", "loss"});
  auto sample_curve = [&](std::size_t index, const std::string& hour, double lo, double hi) {
    for (int k = 0; k < kCurvePoints; ++k) {
      const double eps = lo + (hi - lo) * k / (kCurvePoints - 1);
      w.row({std::to_string(index + 1), hour, fmt(eps), fmt(v.evaluate(index, eps).first)});
    }
  };
  if (kind == lossfit::LossKind::mse) {
    sample_curve(0, "all", -cfg.scenario.band, cfg.scenario.band);
  } else {
    for (std::size_t f = 0; f < v.functions().size(); ++f) {
      const auto& fn = v.functions()[f];
      sample_curve(f, kind == lossfit::LossKind::hourly ? std::to_string(f + 1) : "all", fn.lo(), fn.hi());
    }
  }
  const std::string curve = cfg.output("loss_" + name + "_curve.csv");
  w.save(curve);
  const auto meta = write_sidecar(cfg, curve, {{"kind", name}, {"points_per_function", kCurvePoints}});
  return {path, curve, meta};
}

std::string loss_fingerprint(const lossfit::LossVariant& v) { return fingerprint(lossfit::to_json(v).dump()); }

lossfit::LossVariant resolve_loss(const PipelineConfig& cfg, const std::string& loss, std::string* name) {
  if (loss == "mse") {
    if (name) *name = "mse";
    return lossfit::LossVariant(lossfit::LossKind::mse, {});
  }
  std::string path = loss;
  if (loss == "hourly" || loss == "daily" || loss == "linear") path = cfg.output("loss_" + loss + ".json");
  const auto v = lossfit::load_variant(path);
  if (name) *name = lossfit::to_string(v.kind());
  return v;
}

SplitData load_split(const PipelineConfig& cfg) {
  const std::string path = cfg.resolve(cfg.paths.history);
  if (!fs::exists(path))
    throw NotFoundError("history file '" + path + "' does not exist (create it with `costcast synth-data`)");
  const auto series = forecast::load_series_csv(path);
  const auto data = forecast::build_features(series, cfg.features);
  const auto a = forecast::parse_stamp(cfg.split.train_start), b = forecast::parse_stamp(cfg.split.train_end),
             c = forecast::parse_stamp(cfg.split.test_end);
  SplitData s{data.slice(a, b), data.slice(b, c)};
  if (s.train.rows() == 0) throw ValidationError("split: no training rows between " + cfg.split.train_start + " and " + cfg.split.train_end);
  if (s.test.rows() < 24) throw ValidationError("split: fewer than 24 test rows between " + cfg.split.train_end + " and " + cfg.split.test_end);
  return s;
}

std::vector<std::string> cmd_train(const PipelineConfig& cfg, forecast::ModelKind kind, const std::string& loss) {
  cfg.validate();
  std::string loss_name;
  const auto variant = resolve_loss(cfg, loss, &loss_name);
  const auto split = load_split(cfg);
  forecast::TrainingLog log;
  auto model = [&]() -> forecast::TrainedModel {
    if (kind == forecast::ModelKind::mlr) {
      auto opts = cfg.mlr;
      opts.jobs = cfg.jobs;
      return forecast::train_mlr(split.train, variant, opts, &log);
    }
    return forecast::train_ann(split.train, variant, cfg.ann, &log);
  }();
  model.training()["loss_fingerprint"] = loss_fingerprint(variant);
  model.training()["train_rows"] = split.train.rows();
  model.training()["provenance"] = cfg.provenance();

  const std::string stem = "model_" + forecast::to_string(kind) + "_" + loss_name;
  const std::string path = cfg.output(stem + ".json");
  forecast::save_model(path, model);
  const std::string log_path = cfg.output(stem + "_log.csv");
  csv::write_text(log_path, log.to_csv());
  const auto meta = write_sidecar(cfg, log_path,
                                  {{"model", forecast::to_string(kind)},
                                   {"loss", loss_name},
                                   {"loss_fingerprint", loss_fingerprint(variant)}});
  return {path, log_path, meta};
}

std::vector<metrics::DayPair> group_days(const forecast::Dataset& data, const Eigen::VectorXd& predictions) {
  std::vector<metrics::DayPair> days;
  const std::size_t n = data.rows();
  for (std::size_t r = 0; r + 24 <= n;) {
    if (data.hours[r] != 0 || data.stamps[r + 23] != data.stamps[r] + 23) {
      ++r;
      continue;
    }
    std::vector<double> f(24), a(24);
    for (std::size_t h = 0; h < 24; ++h) {
      f[h] = predictions(static_cast<Eigen::Index>(r + h));
      a[h] = data.y(static_cast<Eigen::Index>(r + h));
    }
    days.push_back({grid::LoadProfile(std::move(f)), grid::LoadProfile(std::move(a))});
    r += 24;
  }
  return days;
}

EvaluationResult cmd_evaluate(const PipelineConfig& cfg, const std::vector<std::string>& model_files) {
  cfg.validate();
  if (model_files.empty()) throw UsageError("evaluate: no model files given");
  std::vector<forecast::TrainedModel> models;
  for (const auto& f : model_files) models.push_back(forecast::load_model(f));
  const auto net = grid::load_network(cfg.resolve(cfg.paths.network));
  const auto rc = reserve_for(cfg, net, 24);
  const auto split = load_split(cfg);

  EvaluationResult out;
  csv::Writer comparison({"name", "model", "loss", "mfepc", "mape", "ofp", "ufp", "n", "excluded_days"});
  csv::Writer plot({"name", "hour", "metric", "value"});
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& model = models[m];
    std::string name = fs::path(model_files[m]).stem().string();
    if (name.rfind("model_", 0) == 0) name = name.substr(6);
    const auto predictions = model.predict(split.test);
    const auto days = group_days(split.test, predictions);
    if (days.empty()) throw ValidationError("evaluate: the test split holds no complete day");
    const auto costs = metrics::evaluate_days(net, rc, days, {}, cfg.jobs);
    ModelReport r{name, forecast::to_string(model.kind()), model.training().value("loss_kind", "unknown"),
                  metrics::build_report(days, costs)};

    const std::string path = cfg.output("report_" + name + ".csv");
    csv::write_text(path, r.report.to_csv());
    out.files.push_back(path);
    out.files.push_back(write_sidecar(cfg, path,
                                      {{"model", r.model},
                                       {"loss", r.loss},
                                       {"model_fingerprint", fingerprint(forecast::to_json(model).dump())},
                                       {"days", r.report.days},
                                       {"excluded_days", r.report.excluded_days}}));
    const auto& a = r.report.average;
    comparison.row({name, r.model, r.loss, fmt(a.mfepc), fmt(a.mape), fmt(a.ofp), fmt(a.ufp), std::to_string(a.n),
                    std::to_string(r.report.excluded_days)});
    for (std::size_t h = 0; h < r.report.hours.size(); ++h) {
      const auto& hm = r.report.hours[h];
      for (const auto& [metric, value] : {std::pair<const char*, double>{"mfepc", hm.mfepc},
                                         {"mape", hm.mape},
                                         {"ofp", hm.ofp},
                                         {"ufp", hm.ufp}})
        plot.row({name, std::to_string(h + 1), metric, fmt(value)});
    }
    out.reports.push_back(std::move(r));
  }
  const std::string cmp = cfg.output("comparison.csv");
  comparison.save(cmp);
  out.files.push_back(cmp);
  out.files.push_back(write_sidecar(cfg, cmp, {{"models", out.reports.size()}}));
  const std::string pl = cfg.output("plot_hourly.csv");
  plot.save(pl);
  out.files.push_back(pl);
  out.files.push_back(write_sidecar(cfg, pl));
  return out;
}

}  // namespace costcast::pipeline
