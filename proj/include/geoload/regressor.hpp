#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "geoload/nn.hpp"

namespace geoload::nn {

/// A flat feature vector and a scalar target.
struct RegressionExample {
  Eigen::VectorXd input;
  double target = 0.0;
};

/// Dense network with scalar output trained on MSE. Used for the
/// benchmark forecasters and as the reference model for gradient checks.
class DenseRegressor {
 public:
  using Example = RegressionExample;

  DenseRegressor() = default;
  DenseRegressor(int input_dim, std::span<const int> hidden, std::uint64_t seed);
  explicit DenseRegressor(Mlp net) : net_(std::move(net)) {}

  int input_dim() const { return net_.input_dim(); }
  const Mlp& network() const { return net_; }
  Mlp& network() { return net_; }

  ParameterSet parameters() const;
  void set_parameters(const ParameterSet& params);

  double predict(const Eigen::VectorXd& input) const;
  std::vector<double> predict(std::span<const Example> batch) const;

  /// Mean squared error over the batch.
  double loss(std::span<const Example> batch) const;
  LossGradient backward(std::span<const Example> batch, Loss loss = Loss::mse) const;

  double min_relu_margin(std::span<const Example> batch) const;

 private:
  Eigen::MatrixXd stack_inputs(std::span<const Example> batch) const;

  Mlp net_;
};

}  // namespace geoload::nn
