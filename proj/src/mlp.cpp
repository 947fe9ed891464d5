#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "showcast/error.hpp"
#include "showcast/learners.hpp"
#include "showcast/rng.hpp"

namespace showcast {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Flat parameter layout: w1 (hidden x inputs), b1 (hidden), w2 (hidden), b2.
struct Shape {
  std::size_t inputs;
  std::size_t hidden;
  std::size_t b1() const { return hidden * inputs; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + hidden; }
  std::size_t size() const { return b2() + 1; }
};

double output_logit(const Shape& s, const double* p, const double* x, double* h) {
  double z = p[s.b2()];
  for (std::size_t j = 0; j < s.hidden; ++j) {
    const double* wj = p + j * s.inputs;
    double a = p[s.b1() + j];
    for (std::size_t i = 0; i < s.inputs; ++i) a += wj[i] * x[i];
    h[j] = sigmoid(a);
    z += p[s.w2() + j] * h[j];
  }
  return z;
}

// Summed cross-entropy over `rows`; adds the summed data gradient into grad.
double accumulate(const Shape& s, const double* p, const DenseMatrix& X,
                  std::span<const std::uint8_t> y, std::span<const std::size_t> rows, double* grad,
                  std::vector<double>& h) {
  double loss = 0.0;
  for (auto r : rows) {
    const double* x = X.row(r);
    const double z = output_logit(s, p, x, h.data());
    loss += softplus(z) - (y[r] ? z : 0.0);
    if (!grad) continue;
    const double dz = sigmoid(z) - double(y[r]);
    grad[s.b2()] += dz;
    for (std::size_t j = 0; j < s.hidden; ++j) {
      grad[s.w2() + j] += dz * h[j];
      const double da = dz * p[s.w2() + j] * h[j] * (1.0 - h[j]);
      grad[s.b1() + j] += da;
      double* gj = grad + j * s.inputs;
      for (std::size_t i = 0; i < s.inputs; ++i) gj[i] += da * x[i];
    }
  }
  return loss;
}

double weight_penalty(const Shape& s, const double* p) {
  double sq = 0.0;
  for (std::size_t k = 0; k < s.b1(); ++k) sq += p[k] * p[k];
  for (std::size_t j = 0; j < s.hidden; ++j) sq += p[s.w2() + j] * p[s.w2() + j];
  return sq;
}

void add_penalty_gradient(const Shape& s, const double* p, double l2, double* grad) {
  for (std::size_t k = 0; k < s.b1(); ++k) grad[k] += l2 * p[k];
  for (std::size_t j = 0; j < s.hidden; ++j) grad[s.w2() + j] += l2 * p[s.w2() + j];
}

}  // namespace

std::vector<double> NeuralNet::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  out.insert(out.end(), w1.begin(), w1.end());
  out.insert(out.end(), b1.begin(), b1.end());
  out.insert(out.end(), w2.begin(), w2.end());
  out.push_back(b2);
  return out;
}

void NeuralNet::assign(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw Error(ErrorCode::LengthMismatch, "parameter vector does not match the network shape");
  }
  auto it = params.begin();
  std::copy_n(it, w1.size(), w1.begin());
  it += static_cast<std::ptrdiff_t>(w1.size());
  std::copy_n(it, b1.size(), b1.begin());
  it += static_cast<std::ptrdiff_t>(b1.size());
  std::copy_n(it, w2.size(), w2.begin());
  it += static_cast<std::ptrdiff_t>(w2.size());
  b2 = *it;
}

double NeuralNet::forward(const double* x) const {
  double z = b2;
  const std::size_t in = inputs();
  for (std::size_t j = 0; j < hidden_units; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < in; ++i) a += w1[j * in + i] * x[i];
    z += w2[j] * sigmoid(a);
  }
  return sigmoid(z);
}

double mlp_objective(const NeuralNet& net, const DenseMatrix& X, std::span<const std::uint8_t> y,
                     double l2, std::span<double> grad) {
  const Shape s{net.inputs(), net.hidden_units};
  if (X.cols != s.inputs || y.size() != X.rows) {
    throw Error(ErrorCode::LengthMismatch, "network inputs do not match the design matrix");
  }
  const auto p = net.flatten();
  std::vector<std::size_t> rows(X.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> h(s.hidden);
  double* g = grad.empty() ? nullptr : grad.data();
  if (g) std::fill(grad.begin(), grad.end(), 0.0);
  const double n = double(X.rows);
  double loss = accumulate(s, p.data(), X, y, rows, g, h) / n;
  loss += 0.5 * l2 * weight_penalty(s, p.data());
  if (g) {
    for (auto& v : grad) v /= n;
    add_penalty_gradient(s, p.data(), l2, g);
  }
  return loss;
}

NeuralNet train_mlp(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
                    std::span<const std::string> features) {
  cfg.validate();
  if (!train.labeled()) throw Error(ErrorCode::InvalidParams, "training needs a labeled dataset");
  const auto yspan = train.flags(target);
  const std::vector<std::uint8_t> y(yspan.begin(), yspan.end());
  const auto events = std::count(y.begin(), y.end(), std::uint8_t{1});
  if (events == 0 || static_cast<std::size_t>(events) == y.size()) {
    throw Error(ErrorCode::DegenerateTarget,
                std::string(to_string(target)) + " flag has a single class in the training data");
  }

  NeuralNet net;
  const auto layout = FeatureLayout::from_dataset(train, features);
  const auto data = encode(layout, train);
  net.encoding = DesignEncoding::fit(layout, data);
  const auto X = net.encoding.matrix(data);
  const Shape s{X.cols, cfg.hidden_units};
  net.hidden_units = s.hidden;
  net.w1.assign(s.hidden * s.inputs, 0.0);
  net.b1.assign(s.hidden, 0.0);
  net.w2.assign(s.hidden, 0.0);

  Rng rng(cfg.seed);
  std::vector<double> params(s.size(), 0.0);
  const double r1 = s.inputs ? 1.0 / std::sqrt(double(s.inputs)) : 0.0;
  const double r2 = 1.0 / std::sqrt(double(s.hidden));
  for (std::size_t k = 0; k < s.b1(); ++k) params[k] = (2.0 * rng.uniform() - 1.0) * r1;
  for (std::size_t j = 0; j < s.hidden; ++j) params[s.w2() + j] = (2.0 * rng.uniform() - 1.0) * r2;

  // Held-out slice for early stopping.
  std::vector<std::size_t> order(X.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * double(X.rows)));
  if (X.rows < 10) n_val = 0;
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> fit_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(fit_rows.begin(), fit_rows.end());
  const auto& monitor = n_val ? val_rows : fit_rows;

  std::vector<double> velocity(s.size(), 0.0), grad(s.size()), h(s.hidden);
  std::vector<double> best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(fit_rows));
    for (std::size_t start = 0; start < fit_rows.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, fit_rows.size() - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      accumulate(s, params.data(), X, y, std::span(fit_rows).subspan(start, len), grad.data(), h);
      for (auto& g : grad) g /= double(len);
      add_penalty_gradient(s, params.data(), cfg.l2, grad.data());
      for (std::size_t k = 0; k < s.size(); ++k) {
        velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
        params[k] += velocity[k];
      }
    }
    net.epochs_run = epoch + 1;
    const double loss =
        accumulate(s, params.data(), X, y, monitor, nullptr, h) / double(std::max<std::size_t>(1, monitor.size()));
    if (loss < best_loss - 1e-9) {
      best_loss = loss;
      best = params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  net.assign(best);
  return net;
}

}  // namespace showcast
