#include "geoload/explain.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "geoload/error.hpp"

namespace geoload {

int NodeMask::kept() const {
  return static_cast<int>(std::count(keep.begin(), keep.end(), std::uint8_t{1}));
}

NodeMask NodeMask::all(int n, bool value) {
  return NodeMask{std::vector<std::uint8_t>(static_cast<std::size_t>(n), value ? 1 : 0)};
}

NodeMask NodeMask::from_bits(int n, std::uint64_t bits) {
  NodeMask m = all(n, false);
  for (int i = 0; i < n; ++i) m.keep[i] = static_cast<std::uint8_t>((bits >> i) & 1u);
  return m;
}

Eigen::MatrixXd edge_mask(const NodeMask& mask) {
  const int n = mask.size();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = static_cast<double>(mask.keep[i] * mask.keep[j]);
  }
  return m;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double kernel_weight(int n, int coalition_size) {
  if (coalition_size < 1 || coalition_size > n - 1) {
    throw Error(ErrorKind::domain, "kernel weight undefined for coalition size " +
                                       std::to_string(coalition_size) + " of " + std::to_string(n));
  }
  const int s = coalition_size;
  return (n - 1) / (binomial(n, s) * s * (n - s));
}

std::string to_string(MaskSampling s) {
  return s == MaskSampling::size_stratified ? "size_stratified" : "uniform";
}

MaskSampling mask_sampling_from_string(const std::string& name) {
  if (name == "size_stratified") return MaskSampling::size_stratified;
  if (name == "uniform") return MaskSampling::uniform;
  throw Error(ErrorKind::config, "unknown mask sampling '" + name + "'");
}

int min_mask_count(int n) { return 2 * n + 2; }

MaskBatch generate_masks(int n, int count, std::uint64_t seed, MaskSampling sampling) {
  if (n < 2) throw Error(ErrorKind::config, "mask generation needs at least 2 nodes");
  if (n > 62) throw Error(ErrorKind::config, "mask generation supports at most 62 nodes");
  if (count < min_mask_count(n)) {
    throw Error(ErrorKind::config, "mask count " + std::to_string(count) + " is below 2n+2 = " +
                                       std::to_string(min_mask_count(n)) + " for n = " +
                                       std::to_string(n));
  }
  MaskBatch batch;
  batch.sampling = sampling;
  batch.seed = seed;
  batch.node_masks.reserve(static_cast<std::size_t>(count));

  std::mt19937_64 rng(seed);
  // Kernel mass of each size: C(n,s) * pi(s) = (n-1) / (s (n-s)).
  std::vector<double> size_mass(static_cast<std::size_t>(n - 1));
  for (int s = 1; s < n; ++s) size_mass[s - 1] = (n - 1.0) / (s * (n - s));
  const double total_mass = std::accumulate(size_mass.begin(), size_mass.end(), 0.0);
  std::discrete_distribution<int> size_dist(size_mass.begin(), size_mass.end());
  std::bernoulli_distribution coin(0.5);
  std::vector<int> nodes(static_cast<std::size_t>(n));

  for (int p = 0; p < count; ++p) {
    NodeMask mask = NodeMask::all(n, false);
    double probability = 0.0;
    if (sampling == MaskSampling::size_stratified) {
      const int s = size_dist(rng) + 1;
      std::iota(nodes.begin(), nodes.end(), 0);
      for (int k = 0; k < s; ++k) {
        std::uniform_int_distribution<int> pick(k, n - 1);
        std::swap(nodes[k], nodes[pick(rng)]);
        mask.keep[nodes[k]] = 1;
      }
      probability = size_mass[s - 1] / total_mass / binomial(n, s);
    } else {
      do {
        for (int i = 0; i < n; ++i) mask.keep[i] = coin(rng) ? 1 : 0;
      } while (mask.kept() == 0 || mask.kept() == n);
      probability = 1.0 / (std::ldexp(1.0, n) - 2.0);
    }
    batch.weights.push_back(kernel_weight(n, mask.kept()) / probability / count);
    batch.edge_masks.push_back(edge_mask(mask));
    batch.node_masks.push_back(std::move(mask));
  }
  return batch;
}

MaskBatch enumerate_masks(int n) {
  if (n < 2 || n > 20) throw Error(ErrorKind::config, "mask enumeration supports 2 <= n <= 20");
  MaskBatch batch;
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t bits = 1; bits < full; ++bits) {
    NodeMask mask = NodeMask::from_bits(n, bits);
    batch.weights.push_back(kernel_weight(n, mask.kept()));
    batch.edge_masks.push_back(edge_mask(mask));
    batch.node_masks.push_back(std::move(mask));
  }
  return batch;
}

double masked_prediction(const IntegratedModel& model, const Sample& sample, const NodeMask& mask) {
  if (mask.size() != model.nodes()) {
    throw Error(ErrorKind::shape, "mask covers " + std::to_string(mask.size()) +
                                      " nodes, graph has " + std::to_string(model.nodes()));
  }
  Eigen::MatrixXd x = sample.node_features;
  for (int i = 0; i < mask.size(); ++i) {
    if (!mask.keep[i] && x.rows() > i) x.row(i).setZero();
  }
  const Propagation p = normalize(apply_edge_mask(model.adjacency(), edge_mask(mask)));
  return model.predict(x, p, sample.exo);
}

Explanation exact_shapley(int n, const CoalitionValue& value, int max_nodes) {
  if (n < 1) throw Error(ErrorKind::config, "exact Shapley needs at least one node");
  if (n > max_nodes || n > 30) {
    throw Error(ErrorKind::config, "exact Shapley enumeration refused for n = " +
                                       std::to_string(n) + " (limit " + std::to_string(max_nodes) +
                                       "); use the sampled kernel explainer instead");
  }
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::vector<double> v(subsets);
  for (std::uint64_t bits = 0; bits < subsets; ++bits) v[bits] = value(NodeMask::from_bits(n, bits));

  // |S|!(n-|S|-1)!/n! = 1 / (n * C(n-1, |S|))
  std::vector<double> coef(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) coef[k] = 1.0 / (n * binomial(n - 1, k));

  Explanation e;
  e.method = "exact";
  e.sampling = "enumeration";
  e.phi0 = v[0];
  e.phi = Eigen::VectorXd::Zero(n);
  e.mask_count = static_cast<int>(subsets);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double acc = 0.0;
    for (std::uint64_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      acc += coef[std::popcount(s)] * (v[s | bit] - v[s]);
    }
    e.phi(i) = acc;
  }
  return e;
}

Explanation exact_shapley(const IntegratedModel& model, const Sample& sample, int max_nodes) {
  return exact_shapley(
      model.nodes(), [&](const NodeMask& m) { return masked_prediction(model, sample, m); },
      max_nodes);
}

std::vector<NodeMask> subgraph_coalitions(int n, std::span<const int> subgraph) {
  std::vector<std::uint8_t> in_target(static_cast<std::size_t>(n), 0);
  for (int v : subgraph) {
    if (v < 0 || v >= n) throw Error(ErrorKind::config, "subgraph node out of range");
    in_target[v] = 1;
  }
  std::vector<int> others;
  for (int i = 0; i < n; ++i) {
    if (!in_target[i]) others.push_back(i);
  }
  if (others.size() > 30) throw Error(ErrorKind::config, "too many coalitions to enumerate");
  std::vector<NodeMask> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << others.size()); ++bits) {
    NodeMask m = NodeMask::all(n, false);
    for (std::size_t k = 0; k < others.size(); ++k) {
      if ((bits >> k) & 1u) m.keep[others[k]] = 1;
    }
    out.push_back(std::move(m));
  }
  return out;
}

double score_subgraph(int n, std::span<const int> subgraph, const CoalitionValue& value) {
  NodeMask target = NodeMask::all(n, false);
  for (int v : subgraph) target.keep.at(static_cast<std::size_t>(v)) = 1;
  const double base = value(target);
  double score = 0.0;
  for (const auto& coalition : subgraph_coalitions(n, subgraph)) {
    const int s = coalition.kept();
    NodeMask joined = coalition;
    for (int i = 0; i < n; ++i) joined.keep[i] |= target.keep[i];
    // |S|!(n-|S|-1)!/n!
    const double weight = 1.0 / (n * binomial(n - 1, s));
    score += weight * (value(joined) - base);
  }
  return score;
}

PerturbedDataset build_perturbed(const CoalitionValue& value, const MaskBatch& masks, int jobs) {
  PerturbedDataset out;
  out.node_masks = masks.node_masks;
  out.outputs.assign(masks.node_masks.size(), 0.0);
  const std::size_t total = masks.node_masks.size();
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) out.outputs[p] = value(masks.node_masks[p]);
  };
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    run(0, total);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> threads;
      const std::size_t chunk = (total + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
          try {
            run(std::min(total, w * chunk), std::min(total, (w + 1) * chunk));
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (std::size_t p = 0; p < total; ++p) {
    if (!std::isfinite(out.outputs[p])) {
      throw Error(ErrorKind::numeric, "non-finite prediction for mask " + std::to_string(p));
    }
  }
  return out;
}

PerturbedDataset build_perturbed(const IntegratedModel& model, const Sample& sample,
                                 const MaskBatch& masks, int jobs) {
  for (std::size_t p = 0; p < masks.node_masks.size(); ++p) {
    if (masks.node_masks[p].size() != model.nodes()) {
      throw Error(ErrorKind::shape, "mask " + std::to_string(p) + " does not match the graph size");
    }
  }
  return build_perturbed(
      [&](const NodeMask& m) { return masked_prediction(model, sample, m); }, masks, jobs);
}

Explanation solve_wls(const PerturbedDataset& perturbed, std::span<const double> weights,
                      double v_full, double v_empty) {
  const std::size_t rows = perturbed.node_masks.size();
  if (rows == 0 || weights.size() != rows || perturbed.outputs.size() != rows) {
    throw Error(ErrorKind::shape, "perturbed dataset, outputs and weights must align");
  }
  const int n = perturbed.node_masks.front().size();
  if (n < 2) throw Error(ErrorKind::config, "kernel regression needs at least 2 nodes");
  const double delta = v_full - v_empty;

  // Eliminate phi_{n-1} = delta - sum_{j<n-1} phi_j.
  Eigen::MatrixXd design(static_cast<Eigen::Index>(rows), n - 1);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
  for (std::size_t p = 0; p < rows; ++p) {
    const auto& m = perturbed.node_masks[p];
    if (m.size() != n) throw Error(ErrorKind::shape, "masks differ in size");
    const int kept = m.kept();
    if (kept == 0 || kept == n) {
      throw Error(ErrorKind::validation, "empty or full mask inside the regression set (row " +
                                             std::to_string(p) + ")");
    }
    if (!(weights[p] > 0.0) || !std::isfinite(weights[p])) {
      throw Error(ErrorKind::validation, "regression weights must be finite and positive");
    }
    const double sw = std::sqrt(weights[p]);
    const double last = m.keep[n - 1];
    for (int j = 0; j < n - 1; ++j) design(static_cast<Eigen::Index>(p), j) = sw * (m.keep[j] - last);
    rhs(static_cast<Eigen::Index>(p)) = sw * (perturbed.outputs[p] - v_empty - last * delta);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < n - 1) {
    throw Error(ErrorKind::solver, "kernel regression is rank deficient (rank " +
                                       std::to_string(qr.rank()) + " of " + std::to_string(n - 1) +
                                       "); increase the number of masks P");
  }
  Eigen::VectorXd beta = qr.solve(rhs);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();

  Explanation e;
  e.method = "kernel";
  e.phi0 = v_empty;
  e.phi.resize(n);
  e.phi.head(n - 1) = beta;
  e.phi(n - 1) = delta - beta.sum();
  e.mask_count = static_cast<int>(rows);
  e.condition_number = cond;
  e.condition_warning = !(cond <= kConditionWarningThreshold);
  return e;
}

bool covers_all_coalitions(int n, int mask_count) {
  return n >= 2 && n <= 20 && mask_count >= (1 << n) - 2;
}

Explanation explain_sample(const IntegratedModel& model, const Sample& sample,
                           const ExplainOptions& options) {
  if (options.exact) {
    Explanation e = exact_shapley(model, sample, options.max_exact_nodes);
    e.seed = options.seed;
    return e;
  }
  const int n = model.nodes();
  const bool enumerate = covers_all_coalitions(n, options.mask_count);
  if (!enumerate && options.mask_count < min_mask_count(n)) {
    throw Error(ErrorKind::config, "mask count " + std::to_string(options.mask_count) +
                                       " below the minimum " + std::to_string(min_mask_count(n)) +
                                       " for n = " + std::to_string(n));
  }
  const MaskBatch masks = enumerate
                              ? enumerate_masks(n)
                              : generate_masks(n, options.mask_count, options.seed, options.sampling);
  const PerturbedDataset perturbed = build_perturbed(model, sample, masks, options.jobs);
  const double v_full = masked_prediction(model, sample, NodeMask::all(n, true));
  const double v_empty = masked_prediction(model, sample, NodeMask::all(n, false));
  Explanation e = solve_wls(perturbed, masks.weights, v_full, v_empty);
  e.seed = options.seed;
  e.sampling = enumerate ? "enumeration" : to_string(options.sampling);
  return e;
}

std::vector<int> rank_descending(const Eigen::VectorXd& importance) {
  std::vector<int> order(static_cast<std::size_t>(importance.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return importance(a) > importance(b); });
  return order;
}

Eigen::VectorXd mean_absolute_phi(std::span<const Explanation> explanations) {
  if (explanations.empty()) throw Error(ErrorKind::validation, "no explanations to aggregate");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(explanations.front().phi.size());
  for (const auto& e : explanations) acc += e.phi.cwiseAbs();
  return acc / static_cast<double>(explanations.size());
}

LocationImportance explain_locations(const IntegratedModel& model, std::span<const Sample> samples,
                                     const ExplainOptions& options,
                                     const FeatureStats& target_stats, const std::string& units) {
  if (samples.empty()) throw Error(ErrorKind::validation, "explain_locations needs samples");
  const int n = model.nodes();
  LocationImportance out;
  out.importance = Eigen::VectorXd::Zero(n);
  out.mean_phi = Eigen::VectorXd::Zero(n);
  out.seed = options.seed;
  out.units = units;
  double phi0_sum = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    ExplainOptions per = options;
    per.seed = splitmix64(options.seed ^ splitmix64(k));
    Explanation e;
    try {
      e = explain_sample(model, samples[k], per);
    } catch (const Error& err) {
      throw Error(err.kind(), "sample " + std::to_string(k) + " (" +
                                  format_timestamp(samples[k].time) + "): " + err.what());
    }
    out.importance += e.phi.cwiseAbs();
    out.mean_phi += e.phi;
    phi0_sum += e.phi0;
    out.mask_count = e.mask_count;
    out.method = e.method;
    out.sampling = e.sampling;
    out.max_condition_number = std::max(out.max_condition_number, e.condition_number);
    out.condition_warning = out.condition_warning || e.condition_warning;
  }
  const double count = static_cast<double>(samples.size());
  out.importance *= target_stats.std / count;
  out.mean_phi *= target_stats.std / count;
  out.mean_phi0 = target_stats.invert(phi0_sum / count);
  out.sample_count = static_cast<int>(samples.size());
  out.ranking = rank_descending(out.importance);
  return out;
}

}  // namespace geoload
