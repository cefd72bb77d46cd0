#include "geoload/regressor.hpp"

#include <cmath>

#include "geoload/error.hpp"
#include "geoload/gradcheck.hpp"

namespace geoload::nn {

DenseRegressor::DenseRegressor(int input_dim, std::span<const int> hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  net_ = make_mlp(input_dim, hidden, 1, rng);
}

ParameterSet DenseRegressor::parameters() const {
  ParameterSet p;
  append_parameters(net_, p);
  return p;
}

void DenseRegressor::set_parameters(const ParameterSet& params) {
  if (assign_parameters(net_, params, 0) != params.arrays.size()) {
    throw Error(ErrorKind::shape, "parameter set has extra arrays");
  }
}

Eigen::MatrixXd DenseRegressor::stack_inputs(std::span<const Example> batch) const {
  Eigen::MatrixXd x(net_.input_dim(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].input.size() != x.rows()) {
      throw Error(ErrorKind::shape, "example input length " +
                                        std::to_string(batch[b].input.size()) +
                                        " does not match network input " +
                                        std::to_string(x.rows()));
    }
    x.col(static_cast<Eigen::Index>(b)) = batch[b].input;
  }
  return x;
}

double DenseRegressor::predict(const Eigen::VectorXd& input) const {
  return forward(net_, input)(0, 0);
}

std::vector<double> DenseRegressor::predict(std::span<const Example> batch) const {
  Eigen::MatrixXd out = forward(net_, stack_inputs(batch));
  return {out.data(), out.data() + out.size()};
}

double DenseRegressor::loss(std::span<const Example> batch) const {
  if (batch.empty()) return 0.0;
  Eigen::MatrixXd out = forward(net_, stack_inputs(batch));
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double r = out(0, static_cast<Eigen::Index>(b)) - batch[b].target;
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

LossGradient DenseRegressor::backward(std::span<const Example> batch, Loss) const {
  const ParameterSet params = parameters();
  LossGradient result{0.0, GradientSet::zeros_like(params)};
  if (batch.empty()) return result;

  MlpTape tape;
  Eigen::MatrixXd out = forward(net_, stack_inputs(batch), &tape);
  const double scale = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd grad_out(1, out.cols());
  double sum = 0.0;
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    const double r = out(0, b) - batch[static_cast<std::size_t>(b)].target;
    sum += r * r;
    grad_out(0, b) = 2.0 * r * scale;
  }
  result.loss = sum * scale;
  if (!std::isfinite(result.loss)) throw_non_finite_loss(params);
  nn::backward(net_, tape, grad_out, result.gradients.arrays, 0);
  return result;
}

double DenseRegressor::min_relu_margin(std::span<const Example> batch) const {
  MlpTape tape;
  forward(net_, stack_inputs(batch), &tape);
  return nn::min_relu_margin(tape, net_);
}

}  // namespace geoload::nn
