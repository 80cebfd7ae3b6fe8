#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "doctest.h"

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/common/rng.hpp"
#include "costcast/forecast/model.hpp"
#include "costcast/forecast/synthetic.hpp"

using namespace costcast;
using namespace costcast::forecast;

namespace {

lossfit::LossVariant mse() { return lossfit::LossVariant(lossfit::LossKind::mse, {}); }

// Smooth-ish asymmetric loss: steep for under-forecasts, shallow above zero.
lossfit::PiecewiseLossFunction asymmetric(double scale) {
  const double lo = -0.2, hi = 0.2;
  return lossfit::PiecewiseLossFunction(lo, hi, {-3.0 * scale, 0.2 * scale, 1.0 * scale},
                                        {-0.15 * scale, 0.01 * scale, -0.03 * scale}, {-0.05, 0.05},
                                        {0.0, 0.02 * scale}, 0.02);
}

lossfit::LossVariant hourly_asymmetric() {
  std::vector<lossfit::PiecewiseLossFunction> fns;
  for (int h = 0; h < 24; ++h) fns.push_back(asymmetric(1.0 + 0.1 * h));
  return lossfit::LossVariant(lossfit::LossKind::hourly, fns);
}

struct Instance {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> hours;
};

Instance random_instance(Rng& rng, int n, int d) {
  Instance in;
  in.x.resize(n, d);
  in.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) in.x(i, j) = uniform(rng, -1.0, 1.0);
    in.y(i) = uniform(rng, 0.5, 2.0);
    in.hours.push_back(static_cast<int>(uniform01(rng) * 24.0));
  }
  return in;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

Dataset linear_dataset(int n, double noise, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.x.resize(n, 3);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) ds.x(i, j) = uniform(rng, -1.0, 1.0);
    ds.y(i) = 100.0 + 10.0 * ds.x(i, 0) - 5.0 * ds.x(i, 1) + 3.0 * ds.x(i, 2) + noise * standard_normal(rng);
    ds.stamps.push_back(i);
    ds.hours.push_back(i % 24);
  }
  ds.names = {"a", "b", "c"};
  ds.fingerprint = "linear-test";
  return ds;
}

TimeSeries constant_temperature_series(int hours) {
  TimeSeries s;
  s.start = parse_stamp("2020-03-01");
  for (int i = 0; i < hours; ++i) {
    s.load.push_back(100.0 + (i % 24));
    s.temperature.push_back(12.5);
  }
  return s;
}

}  // namespace

TEST_CASE("timestamps and calendar fields") {
  const HourStamp t = parse_stamp("2019-01-01 05:00");
  CHECK(format_stamp(t) == "2019-01-01 05:00");
  CHECK(parse_stamp("2019-01-01T05:00") == t);
  CHECK(parse_stamp("2019-01-01") == t - 5);
  const Calendar c = calendar(t);
  CHECK(c.year == 2019);
  CHECK(c.month == 1);
  CHECK(c.weekday == 1);  // Tuesday
  CHECK(c.hour == 5);
  CHECK(calendar(parse_stamp("2020-02-29 23:00")).day == 29);
  CHECK_THROWS_AS(parse_stamp("2019-02-30"), ParseError);
  CHECK_THROWS_AS(parse_stamp("yesterday"), ParseError);
}

TEST_CASE("series CSV round trip and gap detection") {
  SyntheticConfig cfg;
  cfg.days = 4;
  const auto s = generate_synthetic(cfg);
  const std::string path = std::string(COSTCAST_BINARY_DIR) + "/series_rt.csv";
  csv::write_text(path, series_to_csv(s));
  const auto back = load_series_csv(path);
  CHECK(back.start == s.start);
  CHECK(back.load == s.load);
  CHECK(back.temperature == s.temperature);

  csv::write_text(path, "timestamp,load_mw,temperature_c\n2020-01-01 00:00,100,5\n2020-01-01 01:00,101,5\n"
                        "2020-01-01 03:00,99,4\n");
  try {
    load_series_csv(path);
    FAIL("gap not detected");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2020-01-01 01:00") != std::string::npos);
    CHECK(msg.find("2020-01-01 03:00") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("synthetic history is deterministic and scaled") {
  SyntheticConfig cfg;
  cfg.days = 60;
  const auto a = generate_synthetic(cfg), b = generate_synthetic(cfg);
  CHECK(a.load == b.load);
  CHECK(a.temperature == b.temperature);
  CHECK(*std::max_element(a.load.begin(), a.load.end()) == doctest::Approx(cfg.peak_mw));
  cfg.seed = 2;
  CHECK(generate_synthetic(cfg).load != a.load);
}

TEST_CASE("feature counts: reduced default and the 1019-column layout") {
  FeatureConfig fc;
  CHECK(feature_count(fc) == 190);
  fc.full_interactions = true;
  CHECK(feature_count(fc) == 1019);

  SyntheticConfig cfg;
  cfg.days = 6;
  const auto ds = build_features(generate_synthetic(cfg), fc);
  CHECK(ds.cols() == 1019);
  CHECK(std::set<std::string>(ds.names.begin(), ds.names.end()).size() == 1019);
}

TEST_CASE("rows without lag context are dropped") {
  FeatureConfig fc;
  const auto s = constant_temperature_series(24 * 5);
  const auto ds = build_features(s, fc);
  CHECK(ds.rows() == s.size() - 4 - 24 * 3);
  CHECK(ds.stamps.front() == s.start + 4 + 24 * 3);
  CHECK(ds.y(0) == s.load[76]);
  CHECK_THROWS_AS(build_features(constant_temperature_series(70), fc), ValidationError);
}

TEST_CASE("constant temperature makes every temperature-derived feature constant") {
  FeatureConfig fc;
  const auto ds = build_features(constant_temperature_series(24 * 6), fc);
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const std::string& name = ds.names[j];
    if (name.rfind("T", 0) != 0 || name.find('*') != std::string::npos) continue;  // plain temperature powers
    const auto col = ds.x.col(static_cast<Eigen::Index>(j));
    CHECK(col.maxCoeff() == col.minCoeff());
  }
  // Interactions with calendar one-hots take two values: 0 and the constant power.
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    if (ds.names[j].rfind("T^1*H", 0) != 0) continue;
    for (Eigen::Index r = 0; r < ds.x.rows(); ++r) {
      const double v = ds.x(r, static_cast<Eigen::Index>(j));
      CHECK((v == 0.0 || v == 12.5));
    }
  }
}

TEST_CASE("feature construction is deterministic") {
  SyntheticConfig cfg;
  cfg.days = 10;
  const auto s = generate_synthetic(cfg);
  const auto a = build_features(s, {}), b = build_features(s, {});
  CHECK(a.x == b.x);
  CHECK(a.fingerprint == b.fingerprint);
  FeatureConfig other;
  other.lag_hours = 2;
  CHECK(other.fingerprint() != a.fingerprint);
}

TEST_CASE("learning-rate schedules") {
  MlrOptions o;
  CHECK(learning_rate(o, 0) == doctest::Approx(0.5));
  CHECK(learning_rate(o, 1) == doctest::Approx(0.4545).epsilon(1e-4));
  CHECK(learning_rate(o, 2) == doctest::Approx(0.4167).epsilon(1e-4));
  o.gamma = 0.0;
  for (int t : {0, 1, 10, 100}) CHECK(learning_rate(o, t) == 0.5);
  o.gamma = 0.1;
  o.schedule = LrSchedule::recursive;
  CHECK(learning_rate(o, 1) == doctest::Approx(0.5));
  CHECK(learning_rate(o, 2) == doctest::Approx(0.5 / 1.1));
  CHECK(learning_rate(o, 3) == doctest::Approx(0.5 / 1.1 / 1.2));
}

TEST_CASE("single-sample MLR step by hand") {
  Eigen::MatrixXd x(1, 1);
  x << 1.0;
  Eigen::VectorXd y(1), w(2);
  y << 1.0;
  w << 0.0, 2.0;
  const auto o = mlr_objective(x, y, {0}, mse(), w);
  CHECK(o.value == doctest::Approx(1.0));  // eps = 1
  CHECK(o.gradient(1) == doctest::Approx(2.0));
  MlrOptions opts;
  CHECK(w(1) - learning_rate(opts, 0) * o.gradient(1) == doctest::Approx(1.0));
  // Finite-difference cross-check of the same gradient.
  const double h = 1e-6;
  Eigen::VectorXd wp = w, wm = w;
  wp(1) += h;
  wm(1) -= h;
  const double fd = (mlr_objective(x, y, {0}, mse(), wp).value - mlr_objective(x, y, {0}, mse(), wm).value) / (2 * h);
  CHECK(fd == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("mse MLR recovers the FEP-weighted least-squares solution") {
  const Dataset ds = linear_dataset(300, 2.0, 5);
  Eigen::MatrixXd a(300, 4);
  a.col(0).setOnes();
  a.rightCols(3) = ds.x;
  const Eigen::VectorXd wts = ds.y.array().inverse().square();
  const Eigen::MatrixXd atw = a.transpose() * wts.asDiagonal();
  const Eigen::VectorXd closed = (atw * a).ldlt().solve(atw * ds.y);
  MlrOptions opts;
  opts.max_iterations = 500;
  opts.grad_tol = 1e-14;
  const auto m = train_mlr(ds, mse(), opts);
  for (int j = 0; j < 4; ++j) CHECK(m.weights(j) == doctest::Approx(closed(j)).epsilon(1e-4));
}

TEST_CASE("plain MLR update on raw features matches the closed form too") {
  const Dataset ds = linear_dataset(200, 1.0, 6);
  MlrOptions opts;
  opts.whiten = false;
  opts.normalize_step = false;
  opts.eta0 = 5000.0;  // raw features and targets near 100 make the FEP gradient small
  opts.gamma = 0.0;
  opts.max_iterations = 20000;
  opts.grad_tol = 1e-12;
  TrainingLog log;
  const auto m = train_mlr(ds, mse(), opts, &log);
  CHECK(log.loss.back() < log.loss.front());
  Eigen::MatrixXd a(200, 4);
  a.col(0).setOnes();
  a.rightCols(3) = ds.x;
  const Eigen::VectorXd wts = ds.y.array().inverse().square();
  const Eigen::MatrixXd atw = a.transpose() * wts.asDiagonal();
  const Eigen::VectorXd closed = (atw * a).ldlt().solve(atw * ds.y);
  CHECK(relative_error(m.weights, closed) < 1e-3);
}

TEST_CASE("MLR gradient matches central finite differences") {
  Rng rng(17);
  const auto loss = hourly_asymmetric();
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, 40, 5);
    Eigen::VectorXd w(6);
    for (int j = 0; j < 6; ++j) w(j) = uniform(rng, -0.3, 0.3);
    w(0) += 1.0;
    const auto o = mlr_objective(in.x, in.y, in.hours, loss, w);
    Eigen::VectorXd fd(6);
    for (int j = 0; j < 6; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(w(j)));
      Eigen::VectorXd wp = w, wm = w;
      wp(j) += h;
      wm(j) -= h;
      fd(j) = (mlr_objective(in.x, in.y, in.hours, loss, wp).value -
               mlr_objective(in.x, in.y, in.hours, loss, wm).value) / (2 * h);
    }
    CHECK(relative_error(o.gradient, fd) <= 1e-6);
  }
}

TEST_CASE("parallel and serial MLR objectives agree bit for bit") {
  Rng rng(3);
  const Instance in = random_instance(rng, 3000, 7);
  Eigen::VectorXd w = Eigen::VectorXd::Constant(8, 0.1);
  w(0) = 1.0;
  const auto loss = hourly_asymmetric();
  const auto a = mlr_objective(in.x, in.y, in.hours, loss, w, 0);
  const auto b = mlr_objective_serial(in.x, in.y, in.hours, loss, w);
  CHECK(a.value == b.value);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("hourly loss routes each sample to its own hour") {
  Rng rng(8);
  const Instance in = random_instance(rng, 240, 3);
  Eigen::VectorXd w(4);
  w << 1.0, 0.2, -0.1, 0.05;
  const auto base = hourly_asymmetric();
  auto fns = base.functions();
  const int j = 7;
  fns[j] = asymmetric(5.0);
  const lossfit::LossVariant changed(lossfit::LossKind::hourly, fns);
  int touched = 0;
  for (Eigen::Index i = 0; i < in.x.rows(); ++i) {
    const Eigen::MatrixXd xi = in.x.row(i);
    const Eigen::VectorXd yi = in.y.segment(i, 1);
    const std::vector<int> hi{in.hours[static_cast<std::size_t>(i)]};
    const auto g0 = mlr_objective(xi, yi, hi, base, w).gradient;
    const auto g1 = mlr_objective(xi, yi, hi, changed, w).gradient;
    if (hi[0] == j) {
      CHECK(g0 != g1);
      ++touched;
    } else {
      CHECK(g0 == g1);
    }
  }
  CHECK(touched > 0);
}

TEST_CASE("asymmetric loss trains an over-forecasting MLR") {
  SyntheticConfig cfg;
  cfg.days = 730;  // a full training year so the test months are not extrapolated
  const auto ds = build_features(generate_synthetic(cfg), {});
  const HourStamp split = ds.stamps[ds.rows() * 3 / 4];
  const auto train = ds.slice(0, split), test = ds.slice(split, split + 100000);
  const lossfit::PiecewiseLossFunction v(-1.0, 1.0, {-3.0, 1.0}, {0.0, 0.0}, {0.0}, {0.0}, 0.01);
  const lossfit::LossVariant loss(lossfit::LossKind::linear, {v});
  MlrOptions opts;
  opts.max_iterations = 400;
  const auto m = train_mlr(train, loss, opts);
  const Eigen::VectorXd yhat = m.predict(test.x);
  const double ofp = ((yhat - test.y).array() > 0.0).cast<double>().mean();
  CHECK(ofp > 0.5);
}

TEST_CASE("MLR training is bit-for-bit repeatable") {
  SyntheticConfig cfg;
  cfg.days = 40;
  const auto ds = build_features(generate_synthetic(cfg), {});
  MlrOptions opts;
  opts.max_iterations = 50;
  const auto a = train_mlr(ds, hourly_asymmetric(), opts), b = train_mlr(ds, hourly_asymmetric(), opts);
  CHECK(a.weights == b.weights);
}

TEST_CASE("MLR divergence is reported") {
  const Dataset ds = linear_dataset(50, 1.0, 9);
  MlrOptions opts;
  opts.whiten = false;
  opts.normalize_step = false;
  opts.eta0 = 1e9;
  opts.gamma = 0.0;
  CHECK_THROWS_AS(train_mlr(ds, mse(), opts), DivergenceError);
}

TEST_CASE("first Adam step is about -alpha sign(g)") {
  AnnOptions opts;
  AdamState s;
  Eigen::VectorXd g(3);
  g << 0.5, -2.0, 1e-3;
  const Eigen::VectorXd step = adam_step(s, g, opts);
  for (int i = 0; i < 3; ++i) {
    CHECK(step(i) == doctest::Approx(-opts.alpha * g(i) / std::sqrt(g(i) * g(i) + opts.eps_adam)));
    CHECK(std::abs(step(i) + opts.alpha * (g(i) > 0 ? 1.0 : -1.0)) < 0.01 * opts.alpha);
  }
  CHECK(s.t == 1);
}

TEST_CASE("ANN backpropagation matches finite differences") {
  Rng rng(21);
  AnnModel m = AnnModel::initialize(3, {4, 5, 4}, rng);
  m.output_scale = 1.3;
  m.input_mean = Eigen::VectorXd::Constant(3, 0.1);
  m.input_scale = Eigen::VectorXd::Constant(3, 0.9);
  Eigen::VectorXd p = m.parameters();
  for (Eigen::Index k = 0; k < p.size(); ++k) p(k) += uniform(rng, -0.1, 0.1);  // non-zero biases
  m.set_parameters(p);
  const Instance in = random_instance(rng, 20, 3);
  const auto loss = hourly_asymmetric();
  const auto o = ann_objective(m, in.x, in.y, in.hours, loss);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(p(k)));
    Eigen::VectorXd pp = p, pm = p;
    pp(k) += h;
    pm(k) -= h;
    AnnModel a = m, b = m;
    a.set_parameters(pp);
    b.set_parameters(pm);
    const double fd =
        (ann_objective(a, in.x, in.y, in.hours, loss).value - ann_objective(b, in.x, in.y, in.hours, loss).value) /
        (2 * h);
    worst = std::max(worst, std::abs(fd - o.gradient(k)) / std::max(1e-3, std::abs(fd)));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("ANN fits noiseless linear data") {
  const Dataset train = linear_dataset(600, 0.0, 31), test = linear_dataset(200, 0.0, 32);
  AnnOptions opts;
  opts.hidden = {32, 32};
  opts.epochs = 200;
  opts.batch_size = 16;  // 38 Adam steps per epoch
  const auto m = train_ann(train, mse(), opts);
  const Eigen::VectorXd yhat = m.predict(test.x);
  const double mape = ((yhat - test.y).array() / test.y.array()).abs().mean() * 100.0;
  CHECK(mape < 0.5);
}

TEST_CASE("ANN training is repeatable for a fixed seed") {
  const Dataset train = linear_dataset(150, 1.0, 41);
  AnnOptions opts;
  opts.hidden = {8, 6};
  opts.epochs = 5;
  opts.batch_size = 32;  // 150 rows leave a final batch of 22
  TrainingLog log;
  const auto a = train_ann(train, hourly_asymmetric(), opts, &log);
  const auto b = train_ann(train, hourly_asymmetric(), opts);
  CHECK(a.parameters() == b.parameters());
  CHECK(log.iteration.size() == 5);
  opts.seed = 2;
  CHECK(train_ann(train, hourly_asymmetric(), opts).parameters() != a.parameters());
}

TEST_CASE("prediction basics and model files") {
  const Dataset ds = linear_dataset(10, 0.0, 51);
  MlrModel mlr;
  mlr.weights = Eigen::VectorXd::Zero(4);
  mlr.weights(0) = 5.0;
  mlr.feature_fingerprint = ds.fingerprint;
  CHECK((mlr.predict(ds.x).array() == 5.0).all());
  CHECK_THROWS_AS(mlr.predict(Eigen::MatrixXd::Zero(2, 5)), ValidationError);

  Rng rng(1);
  AnnModel ann = AnnModel::initialize(3, {4, 4}, rng);
  ann.set_parameters(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ann.parameter_count())));
  CHECK((ann.predict(ds.x).array() == 0.0).all());

  const Dataset train = linear_dataset(100, 1.0, 52);
  AnnOptions opts;
  opts.hidden = {5, 3};
  opts.epochs = 3;
  const TrainedModel trained_ann(train_ann(train, mse(), opts));
  MlrOptions mopts;
  mopts.max_iterations = 30;
  const TrainedModel trained_mlr(train_mlr(train, mse(), mopts));
  for (const auto* model : {&trained_ann, &trained_mlr}) {
    const std::string path = std::string(COSTCAST_BINARY_DIR) + "/model_rt.json";
    save_model(path, *model);
    const auto back = load_model(path);
    CHECK(back.kind() == model->kind());
    CHECK(back.predict(ds) == model->predict(ds));
    std::remove(path.c_str());
  }
  Dataset other = ds;
  other.fingerprint = "something-else";
  CHECK_THROWS_AS(trained_mlr.predict(other), ValidationError);
  CHECK_THROWS_AS(load_model(std::string(COSTCAST_BINARY_DIR) + "/no_such_model.json"), NotFoundError);
  CHECK_THROWS_AS(model_kind_from_string("svm"), UsageError);
}
