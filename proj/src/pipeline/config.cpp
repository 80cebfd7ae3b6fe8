#include "costcast/pipeline/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "costcast/common/errors.hpp"
#include "costcast/common/hash.hpp"
#include "costcast/forecast/series.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace costcast::pipeline {

namespace {

// Rejects keys outside `allowed` so that typos in config files surface.
void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ParseError("config: '" + section + "' must be an object");
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!names.count(key)) throw ParseError("config: unknown key '" + section + "." + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json fit_options_json(const lossfit::FitOptions& f) {
  return {{"tolerance_fraction", f.tolerance_fraction}, {"tolerance", f.tolerance},
          {"delta_fraction", f.delta_fraction},         {"lambda", f.lambda},
          {"include_shed", f.include_shed},             {"refine_segments", f.refine_segments},
          {"max_segments", f.max_segments}};
}

}  // namespace

std::string PipelineConfig::resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(base_dir) / p).lexically_normal().string();
}

std::string PipelineConfig::output(const std::string& name) const {
  return (fs::path(resolve(paths.output_dir)) / name).string();
}

void PipelineConfig::validate(bool check_inputs) const {
  scenario.validate();
  features.validate();
  ann.validate();
  synthetic.validate();
  if (!(reserve_fraction >= 0.0 && reserve_fraction < 1.0))
    throw ValidationError("config: reserve_fraction must lie in [0, 1)");
  if (!(loss_fit.delta_fraction >= 0.0 && loss_fit.delta_fraction < 0.5))
    throw ValidationError("config: loss_fit.delta_fraction must lie in [0, 0.5)");
  if (!(loss_fit.tolerance_fraction > 0.0) && !(loss_fit.tolerance > 0.0))
    throw ValidationError("config: loss_fit needs a positive tolerance or tolerance_fraction");
  if (mlr.max_iterations < 1) throw ValidationError("config: mlr.max_iterations must be >= 1");
  if (!(mlr.eta0 > 0.0) || !(mlr.gamma >= 0.0)) throw ValidationError("config: mlr.eta0 > 0 and mlr.gamma >= 0 required");
  const auto a = forecast::parse_stamp(split.train_start), b = forecast::parse_stamp(split.train_end),
             c = forecast::parse_stamp(split.test_end);
  if (!(a < b && b < c))
    throw ValidationError("config: split dates must satisfy train_start < train_end < test_end");
  if (jobs < 0) throw ValidationError("config: jobs must be >= 0");
  if (check_inputs)
    for (const auto& [name, path] : {std::pair<std::string, std::string>{"network", paths.network},
                                     {"loads", paths.loads},
                                     {"history", paths.history}})
      if (!fs::exists(resolve(path)))
        throw NotFoundError("config: paths." + name + " file '" + resolve(path) + "' does not exist");
}

json PipelineConfig::to_json() const {
  return {{"paths",
           {{"network", paths.network},
            {"loads", paths.loads},
            {"history", paths.history}}},
          {"scenario", {{"count", scenario.count}, {"band", scenario.band}}},
          {"reserve_fraction", reserve_fraction},
          {"loss_fit", fit_options_json(loss_fit)},
          {"features", features.to_json()},
          {"training", {{"mlr", mlr.to_json()}, {"ann", ann.to_json()}}},
          {"synthetic",
           {{"start", synthetic.start},
            {"days", synthetic.days},
            {"seed", synthetic.seed},
            {"peak_mw", synthetic.peak_mw},
            {"noise", synthetic.noise}}},
          {"split",
           {{"train_start", split.train_start}, {"train_end", split.train_end}, {"test_end", split.test_end}}},
          {"seed", seed}};
}

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  scenario.seed = s;
  ann.seed = s;
}

std::string PipelineConfig::hash() const { return fingerprint(to_json().dump()); }

json PipelineConfig::provenance() const { return {{"config_hash", hash()}, {"seed", seed}}; }

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    check_keys(j, "config",
               {"paths", "scenario", "reserve_fraction", "loss_fit", "features", "training", "synthetic", "split",
                "seed", "jobs"});
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      check_keys(p, "paths", {"network", "loads", "history", "output_dir"});
      read(p, "network", c.paths.network);
      read(p, "loads", c.paths.loads);
      read(p, "history", c.paths.history);
      read(p, "output_dir", c.paths.output_dir);
    }
    if (j.contains("scenario")) {
      const auto& s = j["scenario"];
      check_keys(s, "scenario", {"count", "band"});
      read(s, "count", c.scenario.count);
      read(s, "band", c.scenario.band);
    }
    read(j, "reserve_fraction", c.reserve_fraction);
    if (j.contains("loss_fit")) {
      const auto& f = j["loss_fit"];
      check_keys(f, "loss_fit",
                 {"tolerance_fraction", "tolerance", "delta_fraction", "lambda", "include_shed", "refine_segments",
                  "max_segments"});
      read(f, "tolerance_fraction", c.loss_fit.tolerance_fraction);
      read(f, "tolerance", c.loss_fit.tolerance);
      read(f, "delta_fraction", c.loss_fit.delta_fraction);
      read(f, "lambda", c.loss_fit.lambda);
      read(f, "include_shed", c.loss_fit.include_shed);
      read(f, "refine_segments", c.loss_fit.refine_segments);
      read(f, "max_segments", c.loss_fit.max_segments);
    }
    if (j.contains("features")) {
      check_keys(j["features"], "features", {"lag_hours", "avg_days", "temperature_degree", "full_interactions"});
      c.features = forecast::FeatureConfig::from_json(j["features"]);
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      check_keys(t, "training", {"mlr", "ann"});
      if (t.contains("mlr")) {
        const auto& m = t["mlr"];
        check_keys(m, "training.mlr",
                   {"eta0", "gamma", "max_iterations", "grad_tol", "schedule", "whiten", "normalize_step",
                    "divergence_window"});
        read(m, "eta0", c.mlr.eta0);
        read(m, "gamma", c.mlr.gamma);
        read(m, "max_iterations", c.mlr.max_iterations);
        read(m, "grad_tol", c.mlr.grad_tol);
        read(m, "whiten", c.mlr.whiten);
        read(m, "normalize_step", c.mlr.normalize_step);
        read(m, "divergence_window", c.mlr.divergence_window);
        if (m.contains("schedule")) {
          const auto s = m["schedule"].get<std::string>();
          if (s == "inverse_time") c.mlr.schedule = forecast::LrSchedule::inverse_time;
          else if (s == "recursive") c.mlr.schedule = forecast::LrSchedule::recursive;
          else throw ParseError("config: training.mlr.schedule must be 'inverse_time' or 'recursive'");
        }
      }
      if (t.contains("ann")) {
        const auto& a = t["ann"];
        check_keys(a, "training.ann",
                   {"hidden", "alpha", "beta1", "beta2", "eps_adam", "batch_size", "epochs", "seed",
                    "divergence_window"});
        read(a, "hidden", c.ann.hidden);
        read(a, "alpha", c.ann.alpha);
        read(a, "beta1", c.ann.beta1);
        read(a, "beta2", c.ann.beta2);
        read(a, "eps_adam", c.ann.eps_adam);
        read(a, "batch_size", c.ann.batch_size);
        read(a, "epochs", c.ann.epochs);
        read(a, "divergence_window", c.ann.divergence_window);
      }
    }
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      check_keys(s, "synthetic", {"start", "days", "seed", "peak_mw", "noise"});
      read(s, "start", c.synthetic.start);
      read(s, "days", c.synthetic.days);
      read(s, "seed", c.synthetic.seed);
      read(s, "peak_mw", c.synthetic.peak_mw);
      read(s, "noise", c.synthetic.noise);
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      check_keys(s, "split", {"train_start", "train_end", "test_end"});
      read(s, "train_start", c.split.train_start);
      read(s, "train_end", c.split.train_end);
      read(s, "test_end", c.split.test_end);
    }
    read(j, "seed", c.seed);
    read(j, "jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  c.set_seed(c.seed);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw NotFoundError("config file '" + path + "' does not exist");
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("config file '" + path + "': " + e.what());
  }
  auto c = config_from_json(j);
  c.base_dir = fs::absolute(path).parent_path().string();
  return c;
}

}  // namespace costcast::pipeline
