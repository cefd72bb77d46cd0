#include "geoload/nn.hpp"

#include <cmath>
#include <limits>

#include "geoload/error.hpp"

namespace geoload::nn {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw Error(ErrorKind::config, "unknown activation '" + name + "'");
}

void activate(Eigen::MatrixXd& values, Activation a) {
  if (a == Activation::relu) values = values.cwiseMax(0.0);
}

void activate_backward(const Eigen::MatrixXd& pre, Activation a, Eigen::MatrixXd& grad) {
  if (a == Activation::relu) grad = (pre.array() > 0.0).select(grad, 0.0);
}

Eigen::VectorXd forward(const DenseLayer& layer, const Eigen::VectorXd& input) {
  if (input.size() != layer.input_dim()) {
    throw Error(ErrorKind::shape, "dense layer expects input of length " +
                                      std::to_string(layer.input_dim()) + ", got " +
                                      std::to_string(input.size()));
  }
  Eigen::MatrixXd out = layer.weight * input + layer.bias;
  activate(out, layer.activation);
  return out;
}

std::size_t ParameterSet::count() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += static_cast<std::size_t>(a.size());
  return n;
}

bool ParameterSet::all_finite() const {
  for (const auto& a : arrays) {
    if (!a.allFinite()) return false;
  }
  return true;
}

GradientSet GradientSet::zeros_like(const ParameterSet& params) {
  GradientSet g;
  g.arrays.reserve(params.arrays.size());
  for (const auto& a : params.arrays) g.arrays.push_back(Eigen::MatrixXd::Zero(a.rows(), a.cols()));
  return g;
}

std::size_t GradientSet::count() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += static_cast<std::size_t>(a.size());
  return n;
}

bool congruent(const ParameterSet& params, const GradientSet& grads) {
  if (params.arrays.size() != grads.arrays.size()) return false;
  for (std::size_t i = 0; i < params.arrays.size(); ++i) {
    if (params.arrays[i].rows() != grads.arrays[i].rows() ||
        params.arrays[i].cols() != grads.arrays[i].cols()) {
      return false;
    }
  }
  return true;
}

ParameterSet sgd_step(ParameterSet params, const GradientSet& grads, double learning_rate) {
  if (!congruent(params, grads)) {
    throw Error(ErrorKind::shape, "sgd_step: gradients not congruent with parameters");
  }
  if (learning_rate < 0.0) throw Error(ErrorKind::config, "learning rate must be >= 0");
  for (std::size_t i = 0; i < params.arrays.size(); ++i) {
    params.arrays[i] -= learning_rate * grads.arrays[i];
  }
  return params;
}

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  if (learning_rate < 0.0) throw Error(ErrorKind::config, "learning rate must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw Error(ErrorKind::config, "momentum must lie in [0, 1)");
  }
}

ParameterSet SgdOptimizer::step(ParameterSet params, const GradientSet& grads) {
  if (momentum_ == 0.0) return sgd_step(std::move(params), grads, learning_rate_);
  if (velocity_.arrays.empty()) velocity_ = GradientSet::zeros_like(params);
  for (std::size_t i = 0; i < velocity_.arrays.size(); ++i) {
    velocity_.arrays[i] = momentum_ * velocity_.arrays[i] + grads.arrays[i];
  }
  return sgd_step(std::move(params), velocity_, learning_rate_);
}

Eigen::MatrixXd glorot_uniform(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
  return m;
}

int Mlp::input_dim() const { return layers.empty() ? 0 : layers.front().input_dim(); }
int Mlp::output_dim() const { return layers.empty() ? 0 : layers.back().output_dim(); }

Mlp make_mlp(int input_dim, std::span<const int> hidden, int output_dim, std::mt19937_64& rng) {
  Mlp net;
  int in = input_dim;
  for (int width : hidden) {
    net.layers.push_back({glorot_uniform(width, in, rng), Eigen::VectorXd::Zero(width),
                          Activation::relu});
    in = width;
  }
  net.layers.push_back({glorot_uniform(output_dim, in, rng), Eigen::VectorXd::Zero(output_dim),
                        Activation::identity});
  return net;
}

Eigen::MatrixXd forward(const Mlp& net, const Eigen::MatrixXd& inputs, MlpTape* tape) {
  if (inputs.rows() != net.input_dim()) {
    throw Error(ErrorKind::shape, "network expects input of length " +
                                      std::to_string(net.input_dim()) + ", got " +
                                      std::to_string(inputs.rows()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->preactivations.clear();
  }
  Eigen::MatrixXd h = inputs;
  for (const auto& layer : net.layers) {
    Eigen::MatrixXd pre = layer.weight * h;
    pre.colwise() += layer.bias;
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->preactivations.push_back(pre);
    }
    activate(pre, layer.activation);
    h = std::move(pre);
  }
  return h;
}

Eigen::MatrixXd backward(const Mlp& net, const MlpTape& tape, const Eigen::MatrixXd& grad_output,
                         std::vector<Eigen::MatrixXd>& grads, std::size_t offset) {
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& layer = net.layers[k];
    activate_backward(tape.preactivations[k], layer.activation, delta);
    grads[offset + 2 * k] += delta * tape.inputs[k].transpose();
    grads[offset + 2 * k + 1] += delta.rowwise().sum();
    delta = layer.weight.transpose() * delta;
  }
  return delta;
}

void append_parameters(const Mlp& net, ParameterSet& params) {
  for (const auto& layer : net.layers) {
    params.arrays.push_back(layer.weight);
    params.arrays.emplace_back(layer.bias);
  }
}

std::size_t assign_parameters(Mlp& net, const ParameterSet& params, std::size_t offset) {
  for (auto& layer : net.layers) {
    if (offset + 2 > params.arrays.size()) {
      throw Error(ErrorKind::shape, "parameter set has too few arrays");
    }
    const auto& w = params.arrays.at(offset++);
    const auto& b = params.arrays.at(offset++);
    if (w.rows() != layer.weight.rows() || w.cols() != layer.weight.cols() ||
        b.rows() != layer.bias.size() || b.cols() != 1) {
      throw Error(ErrorKind::shape, "parameter set does not match network layout");
    }
    layer.weight = w;
    layer.bias = b.col(0);
  }
  return offset;
}

double min_relu_margin(const MlpTape& tape, const Mlp& net) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    if (net.layers[k].activation != Activation::relu) continue;
    if (tape.preactivations[k].size() == 0) continue;
    margin = std::min(margin, tape.preactivations[k].cwiseAbs().minCoeff());
  }
  return margin;
}

}  // namespace geoload::nn
