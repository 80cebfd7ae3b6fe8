// Serial reference kernels against their OpenMP counterparts.
// Run: build/bench/bench_kernels [--benchmark_filter=...]

#include <string>

#include <benchmark/benchmark.h>

#include "costcast/common/rng.hpp"
#include "costcast/forecast/mlr.hpp"
#include "costcast/metrics/metrics.hpp"
#include "costcast/scenario/scenario.hpp"

using namespace costcast;

namespace {

struct Shipped {
  grid::Network net = grid::load_network(std::string(COSTCAST_SOURCE_DIR) + "/data/network.json");
  grid::LoadProfile day = grid::load_profile_csv(std::string(COSTCAST_SOURCE_DIR) + "/data/typical_day.csv");
  dispatch::ReserveConfig rc = dispatch::ReserveConfig::fraction_of_capacity(net, 24, 0.025);
};

const Shipped& shipped() {
  static const Shipped s;
  return s;
}

scenario::ScenarioConfig scenarios(int count) {
  scenario::ScenarioConfig sc;
  sc.count = count;
  sc.seed = 7;
  return sc;
}

void BM_LossDatasetSerial(benchmark::State& state) {
  const auto& s = shipped();
  const auto sc = scenarios(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scenario::build_loss_dataset_serial(s.net, s.rc, s.day, sc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LossDatasetParallel(benchmark::State& state) {
  const auto& s = shipped();
  const auto sc = scenarios(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scenario::build_loss_dataset(s.net, s.rc, s.day, sc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<metrics::DayPair> days(int n) {
  const auto& s = shipped();
  std::vector<metrics::DayPair> out;
  for (const auto& p : scenario::generate_scenarios(s.day, scenarios(n))) out.push_back({p, s.day});
  return out;
}

void BM_EvaluateDaysSerial(benchmark::State& state) {
  const auto& s = shipped();
  const auto d = days(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate_days_serial(s.net, s.rc, d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EvaluateDaysParallel(benchmark::State& state) {
  const auto& s = shipped();
  const auto d = days(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate_days(s.net, s.rc, d));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct Regression {
  Eigen::MatrixXd x;
  Eigen::VectorXd y, w;
  std::vector<int> hours;
  lossfit::LossVariant loss;
};

Regression regression(Eigen::Index n) {
  Rng rng(3);
  Regression r;
  const Eigen::Index d = 190;
  r.x.resize(n, d);
  r.y.resize(n);
  r.w = Eigen::VectorXd::Constant(d + 1, 0.001);
  r.w(0) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) r.x(i, j) = uniform(rng, -1.0, 1.0);
    r.y(i) = uniform(rng, 0.8, 1.2);
    r.hours.push_back(static_cast<int>(i % 24));
  }
  const lossfit::PiecewiseLossFunction f(-0.1, 0.1, {-30.0, 10.0}, {0.0, 0.0}, {0.0}, {0.0}, 0.01);
  r.loss = lossfit::LossVariant(lossfit::LossKind::hourly, std::vector<lossfit::PiecewiseLossFunction>(24, f));
  return r;
}

void BM_MlrObjectiveSerial(benchmark::State& state) {
  const auto r = regression(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forecast::mlr_objective_serial(r.x, r.y, r.hours, r.loss, r.w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MlrObjectiveParallel(benchmark::State& state) {
  const auto r = regression(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forecast::mlr_objective(r.x, r.y, r.hours, r.loss, r.w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LossDatasetSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossDatasetParallel)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateDaysSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateDaysParallel)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MlrObjectiveSerial)->Arg(17520)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MlrObjectiveParallel)->Arg(17520)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
