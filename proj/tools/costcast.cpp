#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/pipeline/commands.hpp"

using namespace costcast;
using namespace costcast::pipeline;

namespace {

struct Overrides {
  std::string config;
  std::optional<int> scenarios;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o, bool scenarios, bool seed) {
  cmd->add_option("--config", o.config, "pipeline configuration (JSON)");
  if (scenarios) cmd->add_option("--scenarios", o.scenarios, "number of Monte-Carlo scenarios")->check(CLI::PositiveNumber);
  if (seed) cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "output directory");
}

PipelineConfig effective_config(const Overrides& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else {
    cfg.base_dir = std::filesystem::current_path().string();
  }
  if (o.scenarios) cfg.scenario.count = *o.scenarios;
  if (o.seed) cfg.set_seed(*o.seed);
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.paths.output_dir = std::filesystem::absolute(*o.out).string();
  cfg.validate();
  return cfg;
}

void report(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
}

int fail(const char* kind, const std::exception& e, int code) {
  std::cerr << "costcast: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-oriented load forecasting pipeline"};
  app.require_subcommand(1);
  Overrides o;
  std::string loss_kind, model_kind, loss = "mse", models = "mlr,ann";
  std::vector<std::string> model_files;

  auto* synth = app.add_subcommand("synth-data", "write a synthetic hourly load and temperature history");
  add_common(synth, o, false, false);

  auto* gen = app.add_subcommand("gen-losses", "simulate forecast scenarios and write the loss dataset");
  add_common(gen, o, true, true);

  auto* fit = app.add_subcommand("fit-loss", "fit a loss-function variant to the loss dataset");
  add_common(fit, o, false, false);
  fit->add_option("--kind", loss_kind, "hourly, daily, linear or mse")->required();

  auto* train = app.add_subcommand("train", "train a forecaster with a loss variant");
  add_common(train, o, false, true);
  train->add_option("--model", model_kind, "mlr or ann")->required();
  train->add_option("--loss", loss, "mse, a fitted kind (hourly, daily, linear) or a loss-function file");

  auto* eval = app.add_subcommand("evaluate", "evaluate trained models on the test split");
  add_common(eval, o, false, false);
  eval->add_option("models", model_files, "model files")->required();

  auto* run = app.add_subcommand("run", "run every stage: losses, fits, training of all variants, evaluation");
  add_common(run, o, true, true);
  run->add_option("--model", models, "comma-separated model kinds to train (mlr, ann)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const PipelineConfig cfg = effective_config(o);
    if (*synth) {
      report(cmd_synth_data(cfg));
    } else if (*gen) {
      report(cmd_gen_losses(cfg));
    } else if (*fit) {
      report(cmd_fit_loss(cfg, lossfit::loss_kind_from_string(loss_kind)));
    } else if (*train) {
      report(cmd_train(cfg, forecast::model_kind_from_string(model_kind), loss));
    } else if (*eval) {
      const auto result = cmd_evaluate(cfg, model_files);
      report(result.files);
      std::cout << csv::read_text(cfg.output("comparison.csv"));
    } else if (*run) {
      std::vector<forecast::ModelKind> kinds;
      std::stringstream ss(models);
      for (std::string k; std::getline(ss, k, ',');) kinds.push_back(forecast::model_kind_from_string(k));
      report(cmd_gen_losses(cfg));
      for (const char* k : {"hourly", "daily", "linear"}) report(cmd_fit_loss(cfg, lossfit::loss_kind_from_string(k)));
      std::vector<std::string> files;
      for (auto kind : kinds)
        for (const char* l : {"mse", "hourly", "daily", "linear"}) {
          const auto written = cmd_train(cfg, kind, l);
          report(written);
          files.push_back(written.front());
        }
      const auto result = cmd_evaluate(cfg, files);
      report(result.files);
      std::cout << csv::read_text(cfg.output("comparison.csv"));
    }
  } catch (const UsageError& e) {
    return fail("usage error", e, kExitUsage);
  } catch (const NotFoundError& e) {
    return fail("not found", e, kExitNotFound);
  } catch (const ValidationError& e) {
    return fail("invalid input", e, kExitValidation);
  } catch (const ParseError& e) {
    return fail("malformed input", e, kExitValidation);
  } catch (const InfeasibleError& e) {
    return fail("infeasible dispatch", e, kExitInfeasible);
  } catch (const DivergenceError& e) {
    return fail("training diverged", e, kExitDivergence);
  } catch (const std::exception& e) {
    return fail("error", e, kExitFailure);
  }
  return kExitOk;
}
