#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoload/data.hpp"
#include "geoload/explain.hpp"
#include "geoload/gcn.hpp"
#include "geoload/graph.hpp"
#include "geoload/metrics.hpp"
#include "geoload/trainer.hpp"

namespace geoload {

struct SynthConfig {
  int locations = 9;
  int days = 180;
  /// Location with the largest planted weight; -1 picks the grid centre.
  int dominant = -1;
  /// Explicit planted weights; overrides `dominant` when non-empty.
  std::vector<double> weights;
  double noise_level = 0.02;
  double heat_island_c = 8.0;
  double local_anomaly_c = 2.5;
  double correlation_length_deg = 0.25;

  /// Ground truth for the given seed.
  SyntheticGroundTruth ground_truth(std::uint64_t seed) const;
};

struct ExplainConfig {
  int samples = 2000;
  MaskSampling sampling = MaskSampling::size_stratified;
  bool exact = false;
  int max_exact_nodes = 20;
  /// Explain every `stride`-th test sample.
  int stride = 1;
  /// Report filter: keep only the top-N locations in the ranking (0 = all).
  int top_n = 0;
};

struct BenchmarkConfig {
  std::vector<int> hidden{64, 32};
  /// "full" (singles, none, all, average, HT) or "basic" (none, all, average).
  std::string suite = "full";
};

/// Everything that determines a run. Data paths are not part of the hash;
/// outputs record a fingerprint of the data instead.
struct RunConfig {
  std::filesystem::path data_dir;
  SynthConfig synth;
  NeighborConfig graph;
  ArchitectureConfig architecture;
  TrainerConfig trainer;
  SplitOptions split;
  ExplainConfig explain;
  MetricHours hours;
  BenchmarkConfig benchmark;
  std::uint64_t seed = 42;

  /// Sets the master seed and every seed derived from it.
  void set_seed(std::uint64_t value);
  void validate() const;
  /// Canonical JSON (sorted keys, no paths).
  std::string canonical_json() const;
  std::string hash() const;
  ExplainOptions explain_options(int jobs) const;
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys and
/// ill-typed values are config errors.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace geoload
