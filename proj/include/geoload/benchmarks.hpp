#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geoload/data.hpp"
#include "geoload/metrics.hpp"
#include "geoload/regressor.hpp"
#include "geoload/trainer.hpp"

namespace geoload {

enum class BenchmarkKind { single, none, all, average, virtual_station };

/// Which MF block a dense benchmark forecaster sees. Everything else
/// (exogenous features, trainer, seed, splits) is shared.
struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::none;
  /// single: the location index. virtual_station: the averaged locations.
  std::vector<int> locations;
  TrainerConfig trainer;
  std::vector<int> hidden{64, 32};

  static BenchmarkSpec single(int location, const TrainerConfig& cfg);
  static BenchmarkSpec none(const TrainerConfig& cfg);
  static BenchmarkSpec all(const TrainerConfig& cfg);
  static BenchmarkSpec average(const TrainerConfig& cfg);
  static BenchmarkSpec virtual_station(std::vector<int> locations, const TrainerConfig& cfg);

  /// "L3", "none", "all", "average", "VS[0,4,1]".
  std::string name() const;
  void validate(int n_locations) const;
};

/// Length of the MF block for a spec on an n-location graph.
int mf_input_dim(const BenchmarkSpec& spec, int n_locations);

/// [MF block] followed by the sample's exogenous features.
Eigen::VectorXd benchmark_input(const BenchmarkSpec& spec, const Sample& sample);

std::vector<nn::RegressionExample> benchmark_examples(const BenchmarkSpec& spec,
                                                      std::span<const Sample> samples);

/// Natural-unit forecasts and actuals for a set of samples.
struct ForecastSeries {
  std::vector<Timestamp> times;
  std::vector<double> forecast;
  std::vector<double> actual;
};

struct BenchmarkRun {
  BenchmarkSpec spec;
  nn::DenseRegressor model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double validation_mae = 0.0;
  MetricReport validation;
  MetricReport test;
  ForecastSeries test_forecasts;
  /// Hash of everything except the MF block: trainer, hidden sizes, split.
  std::string shared_fingerprint;
};

/// Fingerprint of trainer config, hidden widths and split boundaries.
std::string shared_fingerprint(const TrainerConfig& trainer, std::span<const int> hidden,
                               const SplitSpec& split);

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const SampleSets& sets,
                           const SplitSpec& split, MetricHours hours = {});

struct HongtaoResult {
  /// Location ids ordered by single-location validation MAE (ties: lower id).
  std::vector<int> ranking;
  std::vector<double> single_validation_mae;  // indexed by location id
  /// Entry k-1 is the virtual station of the top-k locations.
  std::vector<double> validation_mae;
  std::vector<double> test_mae;
  int k_star = 1;       // argmin validation MAE (ties: smaller k)
  int k_test_best = 1;  // argmin test MAE, reported alongside k_star
  BenchmarkRun selected;
};

/// Ranks locations by single-location validation MAE, trains top-k virtual
/// stations for k = 1..n and picks k by validation MAE. When `singles` holds
/// the already-trained single-location runs (indexed by location) they are
/// reused.
HongtaoResult hongtao_select(const SampleSets& sets, const SplitSpec& split, int n_locations,
                             const TrainerConfig& trainer, std::span<const int> hidden,
                             MetricHours hours = {},
                             std::span<const BenchmarkRun> singles = {});

/// argmin with ties resolved to the lowest index.
int argmin_first(std::span<const double> values);

struct SuiteOptions {
  TrainerConfig trainer;
  std::vector<int> hidden{64, 32};
  MetricHours hours;
  bool include_singles = true;
  bool include_hongtao = true;
  int jobs = 1;
};

struct BenchmarkSuite {
  std::vector<BenchmarkRun> singles;
  std::optional<BenchmarkRun> none;
  std::optional<BenchmarkRun> all;
  std::optional<BenchmarkRun> average;
  std::optional<HongtaoResult> hongtao;

  /// Every trained run, in report order.
  std::vector<const BenchmarkRun*> runs() const;
};

/// Config error unless every run carries the same shared fingerprint.
void check_shared_configuration(const BenchmarkSuite& suite);

/// Runs the benchmark family and verifies that all runs share one
/// fingerprint; aborts with a config error otherwise.
BenchmarkSuite run_suite(const SampleSets& sets, const SplitSpec& split, int n_locations,
                         const SuiteOptions& options);

}  // namespace geoload
