#include <algorithm>
#include <cmath>

#include "showcast/error.hpp"
#include "showcast/learners.hpp"

namespace showcast {

namespace {

constexpr double kGradientTolerance = 1e-6;
constexpr double kArmijo = 1e-4;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double logistic_objective(std::span<const double> params, const DenseMatrix& X,
                          std::span<const std::uint8_t> y, double l2, std::span<double> grad) {
  const std::size_t d = X.cols;
  if (params.size() != d + 1 || y.size() != X.rows) {
    throw Error(ErrorCode::LengthMismatch, "logistic parameters do not match the design matrix");
  }
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const double n = double(X.rows);
  const double b = params[d];
  double loss = 0.0;
  for (std::size_t r = 0; r < X.rows; ++r) {
    const double* x = X.row(r);
    double z = b;
    for (std::size_t j = 0; j < d; ++j) z += params[j] * x[j];
    loss += softplus(z) - (y[r] ? z : 0.0);
    if (want_grad) {
      const double residual = sigmoid(z) - double(y[r]);
      for (std::size_t j = 0; j < d; ++j) grad[j] += residual * x[j];
      grad[d] += residual;
    }
  }
  loss /= n;
  double penalty = 0.0;
  for (std::size_t j = 0; j < d; ++j) penalty += params[j] * params[j];
  loss += 0.5 * l2 * penalty;
  if (want_grad) {
    for (std::size_t j = 0; j <= d; ++j) grad[j] /= n;
    for (std::size_t j = 0; j < d; ++j) grad[j] += l2 * params[j];
  }
  return loss;
}

LogisticModel train_logistic(const ColumnarDataset& train, Target target, const TrainConfig& cfg,
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
  LogisticModel model;
  const auto layout = FeatureLayout::from_dataset(train, features);
  const auto data = encode(layout, train);
  model.encoding = DesignEncoding::fit(layout, data);
  const auto X = model.encoding.matrix(data);

  const std::size_t d = X.cols;
  std::vector<double> params(d + 1, 0.0), grad(d + 1), candidate(d + 1);
  const double max_step = cfg.logistic_step * 64.0;
  double step = cfg.logistic_step;
  double loss = logistic_objective(params, X, y, cfg.l2, grad);
  for (model.iterations = 0; model.iterations < cfg.logistic_max_iter; ++model.iterations) {
    double gmax = 0.0, gsq = 0.0;
    for (double g : grad) {
      gmax = std::max(gmax, std::abs(g));
      gsq += g * g;
    }
    model.gradient_norm = gmax;
    if (gmax < kGradientTolerance) {
      model.converged = true;
      break;
    }
    // Backtracking line search on the steepest-descent direction.
    double next_loss = loss;
    while (step > 1e-14) {
      for (std::size_t j = 0; j <= d; ++j) candidate[j] = params[j] - step * grad[j];
      next_loss = logistic_objective(candidate, X, y, cfg.l2, {});
      if (next_loss <= loss - kArmijo * step * gsq) break;
      step *= 0.5;
    }
    if (step <= 1e-14) break;
    params.swap(candidate);
    loss = logistic_objective(params, X, y, cfg.l2, grad);
    step = std::min(step * 1.5, max_step);
  }
  if (!model.converged) {
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    model.gradient_norm = gmax;
    model.converged = gmax < kGradientTolerance;
  }
  model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  model.intercept = params[d];
  return model;
}

}  // namespace showcast
