#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geoload/data.hpp"
#include "geoload/gcn.hpp"

namespace geoload {

/// Binary keep/drop flag per node.
struct NodeMask {
  std::vector<std::uint8_t> keep;

  int size() const { return static_cast<int>(keep.size()); }
  int kept() const;

  static NodeMask all(int n, bool value);
  /// Bit i of `bits` keeps node i.
  static NodeMask from_bits(int n, std::uint64_t bits);
};

/// M_E[i][j] = keep[i] * keep[j] for i != j; the diagonal carries keep[i].
/// A dropped node loses every edge.
Eigen::MatrixXd edge_mask(const NodeMask& mask);

/// Kernel regression weight (n-1) / (C(n, s) * s * (n-s)). Domain error
/// unless 1 <= s <= n-1.
double kernel_weight(int n, int coalition_size);

enum class MaskSampling {
  /// Coalition size drawn with probability proportional to its total kernel
  /// mass, then a uniform subset of that size.
  size_stratified,
  /// Independent fair coin per node, redrawn while empty or full.
  uniform,
};

std::string to_string(MaskSampling s);
MaskSampling mask_sampling_from_string(const std::string& name);

/// P node masks with their edge masks and regression weights.
struct MaskBatch {
  std::vector<NodeMask> node_masks;
  std::vector<Eigen::MatrixXd> edge_masks;
  /// Kernel weight of each mask divided by the probability of drawing it,
  /// scaled by 1/P; this makes the sampled regression an unbiased estimate
  /// of the fully enumerated one.
  std::vector<double> weights;
  MaskSampling sampling = MaskSampling::size_stratified;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(node_masks.size()); }
};

/// Smallest accepted mask count for n nodes (2n + 2).
int min_mask_count(int n);

/// Monte Carlo masks. Config error when n < 2 or P < 2n + 2.
MaskBatch generate_masks(int n, int count, std::uint64_t seed,
                         MaskSampling sampling = MaskSampling::size_stratified);

/// Every mask except the empty and full ones, each with its kernel weight.
/// Intended for n <= 20.
MaskBatch enumerate_masks(int n);

/// Coalition value: the model output on the subgraph a mask keeps.
using CoalitionValue = std::function<double(const NodeMask&)>;

/// Zeroes dropped nodes' features, isolates them, renormalizes the
/// propagation matrix and runs the integrated model.
double masked_prediction(const IntegratedModel& model, const Sample& sample, const NodeMask& mask);

/// phi_0 + sum_i phi_i M_i surrogate fitted to a model.
struct Explanation {
  double phi0 = 0.0;
  Eigen::VectorXd phi;
  int mask_count = 0;
  std::uint64_t seed = 0;
  std::string method;  // "exact", "kernel"
  std::string sampling;
  double condition_number = 1.0;
  bool condition_warning = false;
};

struct PerturbedDataset {
  std::vector<NodeMask> node_masks;
  std::vector<double> outputs;
};

/// Exact Shapley values by enumerating all 2^n coalitions of `value`.
/// phi0 is v(empty).
Explanation exact_shapley(int n, const CoalitionValue& value, int max_nodes = 20);

/// Exact Shapley values of the integrated model's nodes for one sample.
/// Refuses when the graph has more than `max_nodes` nodes.
Explanation exact_shapley(const IntegratedModel& model, const Sample& sample, int max_nodes = 20);

/// Coalitions S over V \ V_s used to score a target subgraph V_s.
std::vector<NodeMask> subgraph_coalitions(int n, std::span<const int> subgraph);

/// Shapley score of the subgraph V_s: sum over S in V \ V_s of
/// |S|!(n-|S|-1)!/n! * (v(S u V_s) - v(V_s)).
double score_subgraph(int n, std::span<const int> subgraph, const CoalitionValue& value);

/// Evaluates the value function on every mask, in mask order. `jobs` > 1
/// splits the masks over threads; results do not depend on `jobs`.
PerturbedDataset build_perturbed(const CoalitionValue& value, const MaskBatch& masks, int jobs = 1);
PerturbedDataset build_perturbed(const IntegratedModel& model, const Sample& sample,
                                 const MaskBatch& masks, int jobs = 1);

inline constexpr double kConditionWarningThreshold = 1e10;

/// Weighted least squares for phi with phi_0 = v_empty and
/// sum(phi) = v_full - v_empty enforced by eliminating the last coefficient.
/// Solver error when the reduced system is rank deficient.
Explanation solve_wls(const PerturbedDataset& perturbed, std::span<const double> weights,
                      double v_full, double v_empty);

struct ExplainOptions {
  int mask_count = 2000;
  std::uint64_t seed = 1;
  MaskSampling sampling = MaskSampling::size_stratified;
  /// Use exact enumeration instead of sampled masks.
  bool exact = false;
  int max_exact_nodes = 20;
  int jobs = 1;
};

/// True when a budget of `mask_count` masks reaches every proper coalition
/// of n nodes; the explainer then enumerates instead of sampling.
bool covers_all_coalitions(int n, int mask_count);

/// Masks, perturbed dataset and constrained WLS for one sample.
Explanation explain_sample(const IntegratedModel& model, const Sample& sample,
                           const ExplainOptions& options);

/// Per-location importance averaged over samples.
struct LocationImportance {
  Eigen::VectorXd importance;      // mean |phi_i| in target units
  Eigen::VectorXd mean_phi;        // mean signed phi_i in target units
  std::vector<int> ranking;        // location ids, most important first
  double mean_phi0 = 0.0;          // mean base value in target units
  int sample_count = 0;
  int mask_count = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::string sampling;
  double max_condition_number = 1.0;
  bool condition_warning = false;
  std::string units;
};

/// Ranks by descending importance, ties broken by lower id.
std::vector<int> rank_descending(const Eigen::VectorXd& importance);

/// Explains each sample (seed derived from options.seed and the sample
/// index) and aggregates mean |phi| converted with `target_stats.std`.
LocationImportance explain_locations(const IntegratedModel& model, std::span<const Sample> samples,
                                     const ExplainOptions& options,
                                     const FeatureStats& target_stats = {},
                                     const std::string& units = "z");

/// Mean of |phi| over explanations (no unit conversion).
Eigen::VectorXd mean_absolute_phi(std::span<const Explanation> explanations);

}  // namespace geoload
