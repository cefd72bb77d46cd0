#pragma once

#include <span>
#include <vector>

#include "geoload/benchmarks.hpp"
#include "geoload/gcn.hpp"
#include "geoload/metrics.hpp"
#include "geoload/trainer.hpp"

namespace geoload {

/// Natural-unit forecasts of the integrated model for a set of samples.
ForecastSeries forecast_series(const IntegratedModel& model, std::span<const Sample> samples,
                               const FeatureStats& target);

struct IntegratedRun {
  IntegratedModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool diverged = false;
  MetricReport validation;
  MetricReport test;
  ForecastSeries test_forecasts;
};

/// Initializes the integrated model from `trainer.seed`, trains it jointly
/// and evaluates validation and test forecasts. A diverged run keeps the
/// best parameters seen before divergence and is flagged, not thrown.
IntegratedRun train_integrated(const ArchitectureConfig& arch, const AdjacencyMatrix& adjacency,
                               const SampleSets& sets, const SplitSpec& split,
                               const TrainerConfig& trainer, MetricHours hours = {});

}  // namespace geoload
