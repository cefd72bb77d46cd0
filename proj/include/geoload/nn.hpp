#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace geoload::nn {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Applies the activation in place.
void activate(Eigen::MatrixXd& values, Activation a);
/// Multiplies `grad` in place by the activation derivative at `pre`.
void activate_backward(const Eigen::MatrixXd& pre, Activation a, Eigen::MatrixXd& grad);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::identity;

  int input_dim() const { return static_cast<int>(weight.cols()); }
  int output_dim() const { return static_cast<int>(weight.rows()); }
};

/// activation(W x + b). Throws a shape error on mismatched input length.
Eigen::VectorXd forward(const DenseLayer& layer, const Eigen::VectorXd& input);

/// Ordered trainable arrays of one model. Biases are stored as column
/// matrices so every entry is a plain matrix.
struct ParameterSet {
  std::vector<Eigen::MatrixXd> arrays;

  std::size_t count() const;
  bool all_finite() const;
};

/// Gradient arrays, congruent in shape and order with a ParameterSet.
struct GradientSet {
  std::vector<Eigen::MatrixXd> arrays;

  static GradientSet zeros_like(const ParameterSet& params);
  std::size_t count() const;
};

bool congruent(const ParameterSet& params, const GradientSet& grads);

/// theta <- theta - learning_rate * g for every array at once.
ParameterSet sgd_step(ParameterSet params, const GradientSet& grads, double learning_rate);

/// Plain SGD with optional heavy-ball momentum. With momentum 0 each step is
/// exactly sgd_step.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum);

  ParameterSet step(ParameterSet params, const GradientSet& grads);

 private:
  double learning_rate_;
  double momentum_;
  GradientSet velocity_;
};

/// Scalar loss plus the gradient of that loss for every parameter.
struct LossGradient {
  double loss = 0.0;
  GradientSet gradients;
};

enum class Loss { mse };

/// Glorot-uniform weight matrix (rows x cols), limit sqrt(6 / (fan_in + fan_out)).
Eigen::MatrixXd glorot_uniform(int rows, int cols, std::mt19937_64& rng);

/// Feed-forward stack of dense layers.
struct Mlp {
  std::vector<DenseLayer> layers;

  int input_dim() const;
  int output_dim() const;
};

/// relu hidden layers, identity output layer, Glorot weights, zero biases.
Mlp make_mlp(int input_dim, std::span<const int> hidden, int output_dim, std::mt19937_64& rng);

/// Values cached by a batched forward pass: the input to each layer and
/// each layer's pre-activation. Columns are batch entries.
struct MlpTape {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> preactivations;
};

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& inputs, MlpTape* tape = nullptr);

/// Back-propagates dL/d(output) through the network. Layer gradients are
/// written to `grads` starting at `offset` (weight then bias per layer);
/// returns dL/d(input).
Eigen::MatrixXd backward(const Mlp& net, const MlpTape& tape, const Eigen::MatrixXd& grad_output,
                         std::vector<Eigen::MatrixXd>& grads, std::size_t offset);

void append_parameters(const Mlp& net, ParameterSet& params);
/// Copies arrays starting at `offset` into the network; returns the next offset.
std::size_t assign_parameters(Mlp& net, const ParameterSet& params, std::size_t offset);

/// Smallest |pre-activation| over every relu unit for a batch; +inf if the
/// network has no relu units.
double min_relu_margin(const MlpTape& tape, const Mlp& net);

}  // namespace geoload::nn
