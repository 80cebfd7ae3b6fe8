#include "costcast/forecast/mlr.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/common/parallel.hpp"

namespace costcast::forecast {

void TrainingLog::add(int it, double l, double g) {
  iteration.push_back(it);
  loss.push_back(l);
  grad_norm.push_back(g);
}

std::string TrainingLog::to_csv() const {
  csv::Writer w({"iteration", "loss", "grad_norm"});
  for (std::size_t i = 0; i < iteration.size(); ++i)
    w.row({std::to_string(iteration[i]), csv::format_double(loss[i]), csv::format_double(grad_norm[i])});
  return w.str();
}

namespace {

void check_shapes(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hours,
                  const Eigen::VectorXd& w) {
  if (x.rows() != y.size() || static_cast<std::size_t>(y.size()) != hours.size())
    throw ValidationError("mlr: feature rows, targets and hours differ in length");
  if (w.size() != x.cols() + 1)
    throw ValidationError("mlr: expected " + std::to_string(x.cols() + 1) + " weights, got " +
                          std::to_string(w.size()));
}

// Accumulates value (slot 0) and gradient (slots 1..d+1) for rows [begin, end).
void accumulate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hours,
                const lossfit::LossVariant& loss, const Eigen::VectorXd& w, std::size_t begin, std::size_t end,
                Eigen::VectorXd& acc) {
  const Eigen::Index d = x.cols();
  for (std::size_t i = begin; i < end; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double yi = y(r);
    const double yhat = w(0) + x.row(r).dot(w.tail(d));
    const auto [l, dl] = loss.evaluate(static_cast<std::size_t>(hours[i]), (yhat - yi) / yi);
    const double s = dl / yi;
    acc(0) += l;
    acc(1) += s;
    acc.segment(2, d) += s * x.row(r).transpose();
  }
}

Objective unpack(const Eigen::VectorXd& acc) {
  Objective o;
  o.value = acc(0);
  o.gradient = acc.tail(acc.size() - 1);
  return o;
}

}  // namespace

Objective mlr_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hours,
                        const lossfit::LossVariant& loss, const Eigen::VectorXd& w, int jobs) {
  check_shapes(x, y, hours, w);
  const auto acc = parallel::blocked_sum(static_cast<std::size_t>(y.size()), x.cols() + 2, jobs,
                                         [&](std::size_t b, std::size_t e, Eigen::VectorXd& partial) {
                                           accumulate(x, y, hours, loss, w, b, e, partial);
                                         });
  return unpack(acc);
}

Objective mlr_objective_serial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& hours,
                               const lossfit::LossVariant& loss, const Eigen::VectorXd& w) {
  check_shapes(x, y, hours, w);
  const std::size_t n = static_cast<std::size_t>(y.size());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(x.cols() + 2);
  // Same block structure as the parallel kernel so sums round identically.
  for (std::size_t b = 0; b < n; b += parallel::kReductionBlock) {
    Eigen::VectorXd partial = Eigen::VectorXd::Zero(x.cols() + 2);
    accumulate(x, y, hours, loss, w, b, std::min(n, b + parallel::kReductionBlock), partial);
    total += partial;
  }
  return unpack(total);
}

double loss_curvature_scale(const lossfit::LossVariant& loss) {
  if (loss.kind() == lossfit::LossKind::mse || loss.functions().empty()) return 2.0;
  double sum = 0.0;
  for (const auto& f : loss.functions()) sum += (f.slopes().back() - f.slopes().front()) / (f.hi() - f.lo());
  const double k = sum / static_cast<double>(loss.functions().size());
  return k > 0.0 ? k : 2.0;
}

nlohmann::json MlrOptions::to_json() const {
  return {{"eta0", eta0},
          {"gamma", gamma},
          {"max_iterations", max_iterations},
          {"grad_tol", grad_tol},
          {"schedule", schedule == LrSchedule::inverse_time ? "inverse_time" : "recursive"},
          {"whiten", whiten},
          {"normalize_step", normalize_step},
          {"divergence_window", divergence_window}};
}

double learning_rate(const MlrOptions& opts, int t) {
  if (opts.schedule == LrSchedule::inverse_time) return opts.eta0 / (1.0 + opts.gamma * t);
  double eta = opts.eta0;
  for (int k = 0; k < t; ++k) eta /= 1.0 + opts.gamma * k;
  return eta;
}

Eigen::VectorXd MlrModel::predict(const Eigen::MatrixXd& x) const {
  if (x.cols() + 1 != weights.size())
    throw ValidationError("mlr: model expects " + std::to_string(weights.size() - 1) + " features, data has " +
                          std::to_string(x.cols()));
  return (x * weights.tail(x.cols())).array() + weights(0);
}

namespace {

// Whitening map z = T^T ((x - mu) / sigma) over the non-constant columns.
struct Whitening {
  Eigen::VectorXd mu, sigma;
  std::vector<Eigen::Index> keep;
  Eigen::MatrixXd t;  // keep.size() x r

  static Whitening fit(const Eigen::MatrixXd& x) {
    Whitening wt;
    const double n = static_cast<double>(x.rows());
    wt.mu = x.colwise().mean().transpose();
    wt.sigma = ((x.rowwise() - wt.mu.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (wt.sigma(j) > 1e-12 * std::max(1.0, std::abs(wt.mu(j)))) wt.keep.push_back(j);
    const Eigen::MatrixXd s = standardize(wt, x);
    const Eigen::MatrixXd c = (s.transpose() * s) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    const Eigen::VectorXd lam = eig.eigenvalues();
    const double cut = 1e-10 * std::max(1e-300, lam.maxCoeff());
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < lam.size(); ++k)
      if (lam(k) > cut) cols.push_back(k);
    wt.t.resize(c.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
      wt.t.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(cols[k]) / std::sqrt(lam(cols[k]));
    return wt;
  }

  static Eigen::MatrixXd standardize(const Whitening& wt, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd s(x.rows(), static_cast<Eigen::Index>(wt.keep.size()));
    for (std::size_t k = 0; k < wt.keep.size(); ++k) {
      const Eigen::Index j = wt.keep[k];
      s.col(static_cast<Eigen::Index>(k)) = (x.col(j).array() - wt.mu(j)) / wt.sigma(j);
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const { return standardize(*this, x) * t; }

  // Raw-space weights (bias first) for yhat = scale * (v0 + z v).
  Eigen::VectorXd unmap(const Eigen::VectorXd& v, double scale, Eigen::Index d) const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    const Eigen::VectorXd u = t * v.tail(v.size() - 1);
    double bias = scale * v(0);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const Eigen::Index j = keep[k];
      w(j + 1) = scale * u(static_cast<Eigen::Index>(k)) / sigma(j);
      bias -= w(j + 1) * mu(j);
    }
    w(0) = bias;
    return w;
  }
};

}  // namespace

MlrModel train_mlr(const Dataset& data, const lossfit::LossVariant& loss, const MlrOptions& opts, TrainingLog* log) {
  if (data.rows() == 0) throw ValidationError("mlr: empty training set");
  if ((data.y.array() <= 0.0).any()) throw ValidationError("mlr: targets must be positive");
  if (!(opts.eta0 > 0.0) || opts.gamma < 0.0 || opts.max_iterations < 0)
    throw ValidationError("mlr: eta0 > 0, gamma >= 0 and max_iterations >= 0 are required");

  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  Whitening wt;
  double y_scale = 1.0;
  if (opts.whiten) {
    wt = Whitening::fit(data.x);
    z = wt.apply(data.x);
    y_scale = data.y.mean();
    y = data.y / y_scale;
  } else {
    z = data.x;
    y = data.y;
  }
  const double n = static_cast<double>(data.rows());
  const double step_scale = opts.normalize_step ? 2.0 / loss_curvature_scale(loss) : 1.0;

  Eigen::VectorXd v = Eigen::VectorXd::Zero(z.cols() + 1);
  double prev = std::numeric_limits<double>::infinity();
  int rising = 0, t = 0;
  for (; t < opts.max_iterations; ++t) {
    const Objective o = mlr_objective(z, y, data.hours, loss, v, opts.jobs);
    const double mean_loss = o.value / n;
    const Eigen::VectorXd g = o.gradient / n;
    const double gnorm = g.norm();
    if (log) log->add(t, mean_loss, gnorm);
    if (!std::isfinite(mean_loss) || !std::isfinite(gnorm))
      throw DivergenceError("mlr: non-finite objective at iteration " + std::to_string(t));
    rising = mean_loss > prev ? rising + 1 : 0;
    if (rising >= opts.divergence_window) {
      std::ostringstream msg;
      msg << "mlr: objective rose for " << rising << " consecutive iterations (iteration " << t
          << ", mean loss " << mean_loss << ")";
      throw DivergenceError(msg.str());
    }
    prev = mean_loss;
    if (gnorm < opts.grad_tol) break;
    v -= learning_rate(opts, t) * step_scale * g;
  }

  MlrModel m;
  m.weights = opts.whiten ? wt.unmap(v, y_scale, data.x.cols()) : v;
  m.feature_fingerprint = data.fingerprint;
  m.training = {{"loss_kind", lossfit::to_string(loss.kind())},
                {"options", opts.to_json()},
                {"iterations", t},
                {"step_scale", step_scale}};
  return m;
}

}  // namespace costcast::forecast
