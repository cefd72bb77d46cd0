#include "geoload/pipeline.hpp"

#include "geoload/error.hpp"

namespace geoload {

ForecastSeries forecast_series(const IntegratedModel& model, std::span<const Sample> samples,
                               const FeatureStats& target) {
  ForecastSeries out;
  const auto z = model.predict(samples);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out.times.push_back(samples[k].time);
    out.forecast.push_back(target.invert(z[k]));
    out.actual.push_back(target.invert(samples[k].target));
  }
  return out;
}

IntegratedRun train_integrated(const ArchitectureConfig& arch, const AdjacencyMatrix& adjacency,
                               const SampleSets& sets, const SplitSpec& split,
                               const TrainerConfig& trainer, MetricHours hours) {
  if (sets.train.empty() || sets.validation.empty() || sets.test.empty()) {
    throw Error(ErrorKind::validation, "training needs non-empty train/validation/test sets");
  }
  IntegratedModel initial(arch, adjacency, trainer.seed);
  auto trained = train(std::move(initial), std::span<const Sample>(sets.train),
                       std::span<const Sample>(sets.validation), trainer);

  IntegratedRun run;
  run.model = std::move(trained.model);
  run.history = std::move(trained.history);
  run.best_epoch = trained.best_epoch;
  run.diverged = trained.diverged;

  const auto& target = split.normalization.target;
  const auto val = forecast_series(run.model, sets.validation, target);
  run.validation = stratified(val.actual, val.forecast, val.times, hours);
  run.test_forecasts = forecast_series(run.model, sets.test, target);
  run.test = stratified(run.test_forecasts.actual, run.test_forecasts.forecast,
                        run.test_forecasts.times, hours);
  return run;
}

}  // namespace geoload
