#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "geoload/data.hpp"
#include "geoload/graph.hpp"
#include "geoload/nn.hpp"
#include "geoload/trainer.hpp"

namespace geoload {

/// One graph convolution: H' = activation(P H W), W is d_in x d_out.
struct GcnLayer {
  Eigen::MatrixXd weight;
  nn::Activation activation = nn::Activation::relu;

  int input_dim() const { return static_cast<int>(weight.rows()); }
  int output_dim() const { return static_cast<int>(weight.cols()); }
};

/// Graph convolutions followed by mean pooling over all n node rows.
/// Masked-out nodes stay in the pooling denominator.
struct RepresentationGenerator {
  std::vector<GcnLayer> layers;
  Propagation propagation;

  int output_dim() const { return layers.empty() ? 0 : layers.back().output_dim(); }
};

/// Cached per-layer values of one generator pass.
struct GcnTape {
  std::vector<Eigen::MatrixXd> propagated;     // P H^(l-1)
  std::vector<Eigen::MatrixXd> preactivations;  // P H^(l-1) W^(l)
};

/// Runs every layer on X (n x m) with the given propagation matrix and
/// mean-pools the last layer's node rows. Returns an empty vector when the
/// generator has no layers.
Eigen::VectorXd gcn_forward(const RepresentationGenerator& gen, const Eigen::MatrixXd& X,
                            const Propagation& propagation, GcnTape* tape = nullptr);

/// Accumulates dL/dW for each layer into grads[offset + l] given dL/dR_G.
void gcn_backward(const RepresentationGenerator& gen, const GcnTape& tape,
                  const Eigen::MatrixXd& propagation, const Eigen::VectorXd& grad_pooled,
                  std::vector<Eigen::MatrixXd>& grads, std::size_t offset);

struct ArchitectureConfig {
  int node_features = kNodeFeatures;
  /// Empty means the generator is bypassed and f sees only the exogenous block.
  std::vector<int> gcn_dims{16, 16};
  std::vector<int> dense_dims{64, 32};
  int exo_dim = kExoDim;
  nn::Activation gcn_activation = nn::Activation::relu;
};

/// Generator g and forecaster f composed as f(concat(g(X, A), X_O)).
class IntegratedModel {
 public:
  using Example = Sample;

  IntegratedModel() = default;
  IntegratedModel(const ArchitectureConfig& arch, const AdjacencyMatrix& adjacency,
                  std::uint64_t seed);
  /// Assembles a model from explicit parts (used by persistence and tests).
  IntegratedModel(const ArchitectureConfig& arch, const AdjacencyMatrix& adjacency,
                  std::uint64_t seed, std::vector<GcnLayer> gcn_layers, nn::Mlp forecaster);

  const ArchitectureConfig& architecture() const { return arch_; }
  const AdjacencyMatrix& adjacency() const { return adjacency_; }
  const RepresentationGenerator& generator() const { return generator_; }
  const nn::Mlp& forecaster() const { return forecaster_; }
  std::uint64_t seed() const { return seed_; }
  int nodes() const { return adjacency_.size(); }

  nn::ParameterSet parameters() const;
  void set_parameters(const nn::ParameterSet& params);

  /// Forecast in z-scored units on the model's own graph.
  double predict(const Sample& sample) const;
  /// Forecast on an arbitrary (sub)graph given its propagation matrix.
  double predict(const Eigen::MatrixXd& node_features, const Propagation& propagation,
                 const Eigen::VectorXd& exo) const;
  std::vector<double> predict(std::span<const Sample> samples) const;

  /// Mean squared error in z-scored units.
  double loss(std::span<const Sample> batch) const;
  nn::LossGradient backward(std::span<const Sample> batch, nn::Loss loss = nn::Loss::mse) const;

  /// Smallest |pre-activation| of any relu unit (generator and forecaster).
  double min_relu_margin(std::span<const Sample> batch) const;

 private:
  void check_sample(const Sample& s) const;
  Eigen::MatrixXd forward_batch(std::span<const Sample> batch, std::vector<GcnTape>* gcn_tapes,
                                nn::MlpTape* mlp_tape) const;

  ArchitectureConfig arch_;
  AdjacencyMatrix adjacency_;
  RepresentationGenerator generator_;
  nn::Mlp forecaster_;
  std::uint64_t seed_ = 0;
};

double predict(const IntegratedModel& model, const Sample& sample);

}  // namespace geoload
