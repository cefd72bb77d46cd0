#include "geoload/gcn.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "geoload/error.hpp"
#include "geoload/gradcheck.hpp"

namespace geoload {

Eigen::VectorXd gcn_forward(const RepresentationGenerator& gen, const Eigen::MatrixXd& X,
                            const Propagation& propagation, GcnTape* tape) {
  if (gen.layers.empty()) return Eigen::VectorXd(0);
  const auto& P = propagation.entries;
  if (P.rows() != X.rows() || P.cols() != X.rows()) {
    throw Error(ErrorKind::shape, "node feature rows (" + std::to_string(X.rows()) +
                                      ") do not match the propagation matrix (" +
                                      std::to_string(P.rows()) + ")");
  }
  if (X.cols() != gen.layers.front().input_dim()) {
    throw Error(ErrorKind::shape, "node feature count " + std::to_string(X.cols()) +
                                      " does not match generator input " +
                                      std::to_string(gen.layers.front().input_dim()));
  }
  if (tape) {
    tape->propagated.clear();
    tape->preactivations.clear();
  }
  Eigen::MatrixXd h = X;
  for (const auto& layer : gen.layers) {
    Eigen::MatrixXd propagated = P * h;
    Eigen::MatrixXd pre = propagated * layer.weight;
    if (tape) {
      tape->propagated.push_back(std::move(propagated));
      tape->preactivations.push_back(pre);
    }
    nn::activate(pre, layer.activation);
    h = std::move(pre);
  }
  return h.colwise().mean().transpose();
}

void gcn_backward(const RepresentationGenerator& gen, const GcnTape& tape,
                  const Eigen::MatrixXd& propagation, const Eigen::VectorXd& grad_pooled,
                  std::vector<Eigen::MatrixXd>& grads, std::size_t offset) {
  if (gen.layers.empty()) return;
  const auto n = propagation.rows();
  // d(mean over rows)/dH = 1/n for every row.
  Eigen::MatrixXd delta =
      Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)) * grad_pooled.transpose();
  for (std::size_t l = gen.layers.size(); l-- > 0;) {
    const auto& layer = gen.layers[l];
    nn::activate_backward(tape.preactivations[l], layer.activation, delta);
    grads[offset + l] += tape.propagated[l].transpose() * delta;
    if (l > 0) delta = propagation.transpose() * (delta * layer.weight.transpose());
  }
}

IntegratedModel::IntegratedModel(const ArchitectureConfig& arch, const AdjacencyMatrix& adjacency,
                                 std::uint64_t seed)
    : arch_(arch), adjacency_(adjacency), seed_(seed) {
  if (!adjacency.is_valid() || adjacency.size() < 1) {
    throw Error(ErrorKind::validation, "invalid adjacency matrix");
  }
  if (arch.node_features < 1 || arch.exo_dim < 0) {
    throw Error(ErrorKind::config, "invalid architecture dimensions");
  }
  std::mt19937_64 rng(seed);
  generator_.propagation = normalize(adjacency);
  int in = arch.node_features;
  for (int width : arch.gcn_dims) {
    if (width < 1) throw Error(ErrorKind::config, "GCN layer widths must be >= 1");
    generator_.layers.push_back({nn::glorot_uniform(in, width, rng), arch.gcn_activation});
    in = width;
  }
  for (int width : arch.dense_dims) {
    if (width < 1) throw Error(ErrorKind::config, "dense layer widths must be >= 1");
  }
  const int f_in = generator_.output_dim() + arch.exo_dim;
  if (f_in < 1) throw Error(ErrorKind::config, "forecaster has no inputs");
  forecaster_ = nn::make_mlp(f_in, arch.dense_dims, 1, rng);
}

IntegratedModel::IntegratedModel(const ArchitectureConfig& arch, const AdjacencyMatrix& adjacency,
                                 std::uint64_t seed, std::vector<GcnLayer> gcn_layers,
                                 nn::Mlp forecaster)
    : arch_(arch), adjacency_(adjacency), forecaster_(std::move(forecaster)), seed_(seed) {
  if (!adjacency.is_valid()) throw Error(ErrorKind::validation, "invalid adjacency matrix");
  generator_.layers = std::move(gcn_layers);
  generator_.propagation = normalize(adjacency);
  int in = arch.node_features;
  for (const auto& layer : generator_.layers) {
    if (layer.input_dim() != in) throw Error(ErrorKind::shape, "GCN layer dimensions do not chain");
    in = layer.output_dim();
  }
  if (forecaster_.input_dim() != generator_.output_dim() + arch.exo_dim ||
      forecaster_.output_dim() != 1) {
    throw Error(ErrorKind::shape, "forecaster input must equal d_L + |X_O| with scalar output");
  }
}

nn::ParameterSet IntegratedModel::parameters() const {
  nn::ParameterSet p;
  for (const auto& layer : generator_.layers) p.arrays.push_back(layer.weight);
  nn::append_parameters(forecaster_, p);
  return p;
}

void IntegratedModel::set_parameters(const nn::ParameterSet& params) {
  std::size_t k = 0;
  if (params.arrays.size() < generator_.layers.size()) {
    throw Error(ErrorKind::shape, "parameter set has too few arrays");
  }
  for (auto& layer : generator_.layers) {
    const auto& w = params.arrays.at(k++);
    if (w.rows() != layer.weight.rows() || w.cols() != layer.weight.cols()) {
      throw Error(ErrorKind::shape, "parameter set does not match generator layout");
    }
    layer.weight = w;
  }
  if (nn::assign_parameters(forecaster_, params, k) != params.arrays.size()) {
    throw Error(ErrorKind::shape, "parameter set has extra arrays");
  }
}

void IntegratedModel::check_sample(const Sample& s) const {
  if (s.exo.size() != arch_.exo_dim) {
    throw Error(ErrorKind::shape, "sample exogenous block has length " +
                                      std::to_string(s.exo.size()) + ", model expects " +
                                      std::to_string(arch_.exo_dim));
  }
  if (!generator_.layers.empty() &&
      (s.node_features.rows() != nodes() || s.node_features.cols() != arch_.node_features)) {
    throw Error(ErrorKind::shape, "sample node features are " +
                                      std::to_string(s.node_features.rows()) + "x" +
                                      std::to_string(s.node_features.cols()) + ", model expects " +
                                      std::to_string(nodes()) + "x" +
                                      std::to_string(arch_.node_features));
  }
}

Eigen::MatrixXd IntegratedModel::forward_batch(std::span<const Sample> batch,
                                               std::vector<GcnTape>* gcn_tapes,
                                               nn::MlpTape* mlp_tape) const {
  const int d = generator_.output_dim();
  Eigen::MatrixXd inputs(d + arch_.exo_dim, static_cast<Eigen::Index>(batch.size()));
  if (gcn_tapes) gcn_tapes->resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    check_sample(batch[b]);
    const auto col = static_cast<Eigen::Index>(b);
    if (d > 0) {
      inputs.col(col).head(d) = gcn_forward(generator_, batch[b].node_features,
                                            generator_.propagation,
                                            gcn_tapes ? &(*gcn_tapes)[b] : nullptr);
    }
    inputs.col(col).tail(arch_.exo_dim) = batch[b].exo;
  }
  return nn::forward(forecaster_, inputs, mlp_tape);
}

double IntegratedModel::predict(const Sample& sample) const {
  return predict(sample.node_features, generator_.propagation, sample.exo);
}

double IntegratedModel::predict(const Eigen::MatrixXd& node_features,
                                const Propagation& propagation,
                                const Eigen::VectorXd& exo) const {
  const int d = generator_.output_dim();
  if (exo.size() != arch_.exo_dim) throw Error(ErrorKind::shape, "exogenous block length mismatch");
  Eigen::VectorXd input(d + arch_.exo_dim);
  if (d > 0) input.head(d) = gcn_forward(generator_, node_features, propagation);
  input.tail(arch_.exo_dim) = exo;
  const double y = nn::forward(forecaster_, input)(0, 0);
  if (!std::isfinite(y)) throw Error(ErrorKind::numeric, "non-finite forecast");
  return y;
}

std::vector<double> IntegratedModel::predict(std::span<const Sample> samples) const {
  Eigen::MatrixXd out = forward_batch(samples, nullptr, nullptr);
  if (!out.allFinite()) throw Error(ErrorKind::numeric, "non-finite forecast");
  return {out.data(), out.data() + out.size()};
}

double IntegratedModel::loss(std::span<const Sample> batch) const {
  if (batch.empty()) return 0.0;
  Eigen::MatrixXd out = forward_batch(batch, nullptr, nullptr);
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double r = out(0, static_cast<Eigen::Index>(b)) - batch[b].target;
    sum += r * r;
  }
  return sum / static_cast<double>(batch.size());
}

nn::LossGradient IntegratedModel::backward(std::span<const Sample> batch, nn::Loss) const {
  const nn::ParameterSet params = parameters();
  nn::LossGradient result{0.0, nn::GradientSet::zeros_like(params)};
  if (batch.empty()) return result;

  std::vector<GcnTape> gcn_tapes;
  nn::MlpTape mlp_tape;
  Eigen::MatrixXd out = forward_batch(batch, &gcn_tapes, &mlp_tape);

  const double scale = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd grad_out(1, out.cols());
  double sum = 0.0;
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    const double r = out(0, b) - batch[static_cast<std::size_t>(b)].target;
    sum += r * r;
    grad_out(0, b) = 2.0 * r * scale;
  }
  result.loss = sum * scale;
  if (!std::isfinite(result.loss)) nn::throw_non_finite_loss(params);

  const std::size_t n_gcn = generator_.layers.size();
  Eigen::MatrixXd grad_in =
      nn::backward(forecaster_, mlp_tape, grad_out, result.gradients.arrays, n_gcn);
  const int d = generator_.output_dim();
  if (d > 0) {
    // Chain dL/dR_G through the generator, sample by sample.
    for (std::size_t b = 0; b < batch.size(); ++b) {
      Eigen::VectorXd grad_r = grad_in.col(static_cast<Eigen::Index>(b)).head(d);
      gcn_backward(generator_, gcn_tapes[b], generator_.propagation.entries, grad_r,
                   result.gradients.arrays, 0);
    }
  }
  return result;
}

double IntegratedModel::min_relu_margin(std::span<const Sample> batch) const {
  std::vector<GcnTape> gcn_tapes;
  nn::MlpTape mlp_tape;
  forward_batch(batch, &gcn_tapes, &mlp_tape);
  double margin = nn::min_relu_margin(mlp_tape, forecaster_);
  for (const auto& tape : gcn_tapes) {
    for (std::size_t l = 0; l < generator_.layers.size(); ++l) {
      if (generator_.layers[l].activation != nn::Activation::relu) continue;
      margin = std::min(margin, tape.preactivations[l].cwiseAbs().minCoeff());
    }
  }
  return margin;
}

double predict(const IntegratedModel& model, const Sample& sample) { return model.predict(sample); }

}  // namespace geoload
