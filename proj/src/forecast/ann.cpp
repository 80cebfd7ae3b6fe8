#include "costcast/forecast/ann.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "costcast/common/errors.hpp"

namespace costcast::forecast {

void AnnOptions::validate() const {
  if (hidden.empty()) throw ValidationError("ann: at least one hidden layer is required");
  for (int w : hidden)
    if (w < 1) throw ValidationError("ann: hidden widths must be positive");
  if (!(alpha > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps_adam > 0.0))
    throw ValidationError("ann: Adam requires alpha > 0, beta in [0, 1) and eps_adam > 0");
  if (batch_size < 1 || epochs < 0) throw ValidationError("ann: batch_size >= 1 and epochs >= 0 are required");
}

nlohmann::json AnnOptions::to_json() const {
  return {{"hidden", hidden}, {"alpha", alpha},           {"beta1", beta1}, {"beta2", beta2},
          {"eps_adam", eps_adam}, {"batch_size", batch_size}, {"epochs", epochs}, {"seed", seed},
          {"divergence_window", divergence_window}};
}

AnnModel AnnModel::initialize(int inputs, const std::vector<int>& hidden, Rng& rng) {
  AnnModel m;
  std::vector<int> widths{inputs};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const double r = std::sqrt(6.0 / (widths[l - 1] + widths[l]));
    Eigen::MatrixXd w(widths[l], widths[l - 1]);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -r, r);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(widths[l]));
  }
  m.input_mean = Eigen::VectorXd::Zero(inputs);
  m.input_scale = Eigen::VectorXd::Ones(inputs);
  return m;
}

namespace {

Eigen::MatrixXd standardized_columns(const AnnModel& m, const Eigen::MatrixXd& x,
                                     const std::vector<Eigen::Index>* rows) {
  if (x.cols() != m.inputs())
    throw ValidationError("ann: model expects " + std::to_string(m.inputs()) + " features, data has " +
                          std::to_string(x.cols()));
  const Eigen::Index n = rows ? static_cast<Eigen::Index>(rows->size()) : x.rows();
  Eigen::MatrixXd a(x.cols(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index r = rows ? (*rows)[static_cast<std::size_t>(k)] : k;
    a.col(k) = (x.row(r).transpose() - m.input_mean).cwiseQuotient(m.input_scale);
  }
  return a;
}

// Pre-activations z and activations a for each layer; a[0] is the input.
struct Forward {
  std::vector<Eigen::MatrixXd> z, a;
};

Forward forward(const AnnModel& m, Eigen::MatrixXd input) {
  Forward f;
  f.a.push_back(std::move(input));
  const std::size_t layers = m.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (m.weights[l] * f.a.back()).colwise() + m.biases[l];
    Eigen::MatrixXd a = l + 1 < layers ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    f.z.push_back(std::move(z));
    f.a.push_back(std::move(a));
  }
  return f;
}

}  // namespace

Eigen::VectorXd AnnModel::predict(const Eigen::MatrixXd& x) const {
  const Forward f = forward(*this, standardized_columns(*this, x, nullptr));
  return output_scale * f.a.back().row(0).transpose();
}

std::size_t AnnModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Eigen::VectorXd AnnModel::parameters() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.segment(k, weights[l].size()) = Eigen::Map<const Eigen::VectorXd>(weights[l].data(), weights[l].size());
    k += weights[l].size();
    p.segment(k, biases[l].size()) = biases[l];
    k += biases[l].size();
  }
  return p;
}

void AnnModel::set_parameters(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != parameter_count())
    throw ValidationError("ann: parameter vector has the wrong length");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(weights[l].data(), weights[l].size()) = p.segment(k, weights[l].size());
    k += weights[l].size();
    biases[l] = p.segment(k, biases[l].size());
    k += biases[l].size();
  }
}

Objective ann_objective(const AnnModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<int>& hours, const lossfit::LossVariant& loss,
                        const std::vector<Eigen::Index>* rows) {
  if (x.rows() != y.size() || static_cast<std::size_t>(y.size()) != hours.size())
    throw ValidationError("ann: feature rows, targets and hours differ in length");
  const Forward f = forward(m, standardized_columns(m, x, rows));
  const Eigen::Index n = f.a.back().cols();
  Objective o;
  Eigen::MatrixXd delta(1, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index r = rows ? (*rows)[static_cast<std::size_t>(k)] : k;
    const double yi = y(r);
    const auto [l, dl] = loss.evaluate(static_cast<std::size_t>(hours[static_cast<std::size_t>(r)]),
                                       (m.output_scale * f.a.back()(0, k) - yi) / yi);
    o.value += l;
    delta(0, k) = dl * m.output_scale / yi;
  }
  const std::size_t layers = m.weights.size();
  std::vector<Eigen::MatrixXd> dw(layers);
  std::vector<Eigen::VectorXd> db(layers);
  for (std::size_t l = layers; l-- > 0;) {
    dw[l] = delta * f.a[l].transpose();
    db[l] = delta.rowwise().sum();
    if (l > 0) delta = (m.weights[l].transpose() * delta).cwiseProduct((f.z[l - 1].array() > 0.0).cast<double>().matrix());
  }
  o.gradient.resize(static_cast<Eigen::Index>(m.parameter_count()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    o.gradient.segment(k, dw[l].size()) = Eigen::Map<const Eigen::VectorXd>(dw[l].data(), dw[l].size());
    k += dw[l].size();
    o.gradient.segment(k, db[l].size()) = db[l];
    k += db[l].size();
  }
  return o;
}

Eigen::VectorXd adam_step(AdamState& s, const Eigen::VectorXd& g, const AnnOptions& opts) {
  if (s.t == 0) {
    s.m = Eigen::VectorXd::Zero(g.size());
    s.v = Eigen::VectorXd::Zero(g.size());
  }
  ++s.t;
  s.m = opts.beta1 * s.m + (1.0 - opts.beta1) * g;
  s.v = opts.beta2 * s.v + (1.0 - opts.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(s.t));
  return -opts.alpha * (s.m / c1).array() / ((s.v / c2).array() + opts.eps_adam).sqrt();
}

AnnModel train_ann(const Dataset& data, const lossfit::LossVariant& loss, const AnnOptions& opts, TrainingLog* log) {
  opts.validate();
  if (data.rows() == 0) throw ValidationError("ann: empty training set");
  if ((data.y.array() <= 0.0).any()) throw ValidationError("ann: targets must be positive");
  Rng rng(opts.seed);
  AnnModel m = AnnModel::initialize(static_cast<int>(data.cols()), opts.hidden, rng);
  const double n = static_cast<double>(data.rows());
  m.input_mean = data.x.colwise().mean().transpose();
  m.input_scale = ((data.x.rowwise() - m.input_mean.transpose()).array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index j = 0; j < m.input_scale.size(); ++j)
    if (!(m.input_scale(j) > 1e-12)) m.input_scale(j) = 1.0;
  m.output_scale = data.y.mean();
  m.feature_fingerprint = data.fingerprint;

  std::vector<Eigen::Index> order(data.rows());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  AdamState adam;
  Eigen::VectorXd p = m.parameters();
  double prev = std::numeric_limits<double>::infinity();
  int rising = 0;
  const std::size_t b = static_cast<std::size_t>(opts.batch_size);
  for (int ep = 0; ep < opts.epochs; ++ep) {
    shuffle(order, rng);
    double epoch_loss = 0.0, grad_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += b) {
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + b)));
      const Objective o = ann_objective(m, data.x, data.y, data.hours, loss, &rows);
      if (!std::isfinite(o.value) || !o.gradient.allFinite()) {
        std::ostringstream msg;
        msg << "ann: non-finite loss in epoch " << ep << ", batch " << batches << " (rows starting at "
            << format_stamp(data.stamps[static_cast<std::size_t>(rows.front())]) << ")";
        throw DivergenceError(msg.str());
      }
      p += adam_step(adam, o.gradient, opts);
      m.set_parameters(p);
      epoch_loss += o.value;
      grad_sum += o.gradient.norm();
      ++batches;
    }
    const double mean_loss = epoch_loss / n;
    if (log) log->add(ep, mean_loss, grad_sum / batches);
    rising = mean_loss > prev ? rising + 1 : 0;
    if (rising >= opts.divergence_window)
      throw DivergenceError("ann: epoch loss rose for " + std::to_string(rising) + " consecutive epochs");
    prev = mean_loss;
  }
  m.training = {{"loss_kind", lossfit::to_string(loss.kind())}, {"options", opts.to_json()}, {"epochs", opts.epochs}};
  return m;
}

}  // namespace costcast::forecast
