#include "geoload/benchmarks.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <thread>

#include "geoload/error.hpp"
#include "geoload/hash.hpp"

namespace geoload {

BenchmarkSpec BenchmarkSpec::single(int location, const TrainerConfig& cfg) {
  return {BenchmarkKind::single, {location}, cfg, {64, 32}};
}
BenchmarkSpec BenchmarkSpec::none(const TrainerConfig& cfg) {
  return {BenchmarkKind::none, {}, cfg, {64, 32}};
}
BenchmarkSpec BenchmarkSpec::all(const TrainerConfig& cfg) {
  return {BenchmarkKind::all, {}, cfg, {64, 32}};
}
BenchmarkSpec BenchmarkSpec::average(const TrainerConfig& cfg) {
  return {BenchmarkKind::average, {}, cfg, {64, 32}};
}
BenchmarkSpec BenchmarkSpec::virtual_station(std::vector<int> locations, const TrainerConfig& cfg) {
  return {BenchmarkKind::virtual_station, std::move(locations), cfg, {64, 32}};
}

std::string BenchmarkSpec::name() const {
  switch (kind) {
    case BenchmarkKind::single: return "L" + std::to_string(locations.at(0));
    case BenchmarkKind::none: return "none";
    case BenchmarkKind::all: return "all";
    case BenchmarkKind::average: return "average";
    case BenchmarkKind::virtual_station: {
      std::string s = "VS[";
      for (std::size_t i = 0; i < locations.size(); ++i) s += (i ? "," : "") + std::to_string(locations[i]);
      return s + "]";
    }
  }
  return "?";
}

void BenchmarkSpec::validate(int n_locations) const {
  if (kind == BenchmarkKind::single && locations.size() != 1) {
    throw Error(ErrorKind::config, "single-location benchmark needs exactly one index");
  }
  if (kind == BenchmarkKind::virtual_station && locations.empty()) {
    throw Error(ErrorKind::config, "virtual station needs at least one location");
  }
  for (int i : locations) {
    if (i < 0 || i >= n_locations) {
      throw Error(ErrorKind::config, "benchmark location index " + std::to_string(i) +
                                         " outside [0, " + std::to_string(n_locations) + ")");
    }
  }
}

int mf_input_dim(const BenchmarkSpec& spec, int n_locations) {
  switch (spec.kind) {
    case BenchmarkKind::none: return 0;
    case BenchmarkKind::all: return kNodeFeatures * n_locations;
    default: return kNodeFeatures;
  }
}

namespace {

/// Incremental mean: exact when every value is equal.
Eigen::VectorXd mean_rows(const Eigen::MatrixXd& x, std::span<const int> rows) {
  Eigen::VectorXd m = x.row(rows[0]).transpose();
  for (std::size_t k = 1; k < rows.size(); ++k) {
    m += (x.row(rows[k]).transpose() - m) / static_cast<double>(k + 1);
  }
  return m;
}

ForecastSeries natural_forecasts(const nn::DenseRegressor& model,
                                 std::span<const nn::RegressionExample> examples,
                                 std::span<const Sample> samples, const FeatureStats& target) {
  ForecastSeries out;
  const auto z = model.predict(examples);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out.times.push_back(samples[k].time);
    out.forecast.push_back(target.invert(z[k]));
    out.actual.push_back(target.invert(samples[k].target));
  }
  return out;
}

}  // namespace

Eigen::VectorXd benchmark_input(const BenchmarkSpec& spec, const Sample& sample) {
  const int n = static_cast<int>(sample.node_features.rows());
  const int mf = mf_input_dim(spec, n);
  Eigen::VectorXd in(mf + sample.exo.size());
  switch (spec.kind) {
    case BenchmarkKind::none:
      break;
    case BenchmarkKind::single:
      in.head(mf) = sample.node_features.row(spec.locations.at(0)).transpose();
      break;
    case BenchmarkKind::all:
      for (int i = 0; i < n; ++i) {
        in.segment(kNodeFeatures * i, kNodeFeatures) = sample.node_features.row(i).transpose();
      }
      break;
    case BenchmarkKind::average: {
      std::vector<int> rows(static_cast<std::size_t>(n));
      std::iota(rows.begin(), rows.end(), 0);
      in.head(mf) = mean_rows(sample.node_features, rows);
      break;
    }
    case BenchmarkKind::virtual_station:
      in.head(mf) = mean_rows(sample.node_features, spec.locations);
      break;
  }
  in.tail(sample.exo.size()) = sample.exo;
  return in;
}

std::vector<nn::RegressionExample> benchmark_examples(const BenchmarkSpec& spec,
                                                      std::span<const Sample> samples) {
  std::vector<nn::RegressionExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({benchmark_input(spec, s), s.target});
  return out;
}

std::string shared_fingerprint(const TrainerConfig& trainer, std::span<const int> hidden,
                               const SplitSpec& split) {
  std::ostringstream os;
  os.precision(17);
  os << "lr=" << trainer.learning_rate << ";epochs=" << trainer.max_epochs
     << ";patience=" << trainer.patience << ";batch=" << trainer.batch_size
     << ";seed=" << trainer.seed << ";momentum=" << trainer.momentum << ";hidden=";
  for (int h : hidden) os << h << ',';
  os << ";split=";
  for (auto t : {split.train_begin, split.train_end, split.validation_begin, split.validation_end,
                 split.test_begin, split.test_end}) {
    os << format_timestamp(t) << ',';
  }
  return hash_hex(os.str());
}

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const SampleSets& sets,
                           const SplitSpec& split, MetricHours hours) {
  if (sets.train.empty() || sets.validation.empty() || sets.test.empty()) {
    throw Error(ErrorKind::validation, "benchmark needs non-empty train/validation/test sets");
  }
  const int n = static_cast<int>(sets.train.front().node_features.rows());
  spec.validate(n);

  const auto train_x = benchmark_examples(spec, sets.train);
  const auto val_x = benchmark_examples(spec, sets.validation);
  const auto test_x = benchmark_examples(spec, sets.test);

  nn::DenseRegressor model(static_cast<int>(train_x.front().input.size()), spec.hidden,
                           spec.trainer.seed);
  auto trained = train(std::move(model), std::span<const nn::RegressionExample>(train_x),
                       std::span<const nn::RegressionExample>(val_x), spec.trainer);
  if (trained.diverged) {
    throw Error(ErrorKind::numeric, "benchmark " + spec.name() + " diverged during training");
  }

  BenchmarkRun run;
  run.spec = spec;
  run.model = std::move(trained.model);
  run.history = std::move(trained.history);
  run.best_epoch = trained.best_epoch;
  run.shared_fingerprint = shared_fingerprint(spec.trainer, spec.hidden, split);

  const auto& target = split.normalization.target;
  const auto val = natural_forecasts(run.model, val_x, sets.validation, target);
  run.validation = stratified(val.actual, val.forecast, val.times, hours);
  run.validation_mae = run.validation.mae;
  run.test_forecasts = natural_forecasts(run.model, test_x, sets.test, target);
  run.test = stratified(run.test_forecasts.actual, run.test_forecasts.forecast,
                        run.test_forecasts.times, hours);
  return run;
}

int argmin_first(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::domain, "argmin of an empty list");
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] < values[best]) best = static_cast<int>(k);
  }
  return best;
}

namespace {

template <class F>
std::vector<BenchmarkRun> run_many(const std::vector<BenchmarkSpec>& specs, int jobs, F&& run_one) {
  std::vector<BenchmarkRun> out(specs.size());
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1,
                                                      std::max<std::size_t>(specs.size(), 1));
  if (workers == 1) {
    for (std::size_t k = 0; k < specs.size(); ++k) out[k] = run_one(specs[k]);
    return out;
  }
  std::vector<std::exception_ptr> errors(specs.size());
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        for (std::size_t k = w; k < specs.size(); k += workers) {
          try {
            out[k] = run_one(specs[k]);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

HongtaoResult hongtao_select(const SampleSets& sets, const SplitSpec& split, int n_locations,
                             const TrainerConfig& trainer, std::span<const int> hidden,
                             MetricHours hours, std::span<const BenchmarkRun> singles) {
  if (n_locations < 2) throw Error(ErrorKind::config, "Hongtao selection needs n >= 2");
  auto with_hidden = [&](BenchmarkSpec s) {
    s.hidden.assign(hidden.begin(), hidden.end());
    return s;
  };

  std::vector<BenchmarkRun> owned;
  if (singles.empty()) {
    for (int i = 0; i < n_locations; ++i) {
      owned.push_back(run_benchmark(with_hidden(BenchmarkSpec::single(i, trainer)), sets, split, hours));
    }
    singles = owned;
  }
  if (static_cast<int>(singles.size()) != n_locations) {
    throw Error(ErrorKind::config, "need one single-location run per location");
  }

  HongtaoResult r;
  for (const auto& run : singles) r.single_validation_mae.push_back(run.validation_mae);
  r.ranking.resize(static_cast<std::size_t>(n_locations));
  std::iota(r.ranking.begin(), r.ranking.end(), 0);
  std::stable_sort(r.ranking.begin(), r.ranking.end(), [&](int a, int b) {
    return r.single_validation_mae[a] < r.single_validation_mae[b];
  });

  std::vector<BenchmarkRun> stations;
  for (int k = 1; k <= n_locations; ++k) {
    if (k == 1) {
      // The top-1 virtual station has exactly the single-location inputs.
      stations.push_back(singles[r.ranking[0]]);
    } else {
      std::vector<int> top(r.ranking.begin(), r.ranking.begin() + k);
      stations.push_back(
          run_benchmark(with_hidden(BenchmarkSpec::virtual_station(top, trainer)), sets, split, hours));
    }
    r.validation_mae.push_back(stations.back().validation_mae);
    r.test_mae.push_back(stations.back().test.mae);
  }
  r.k_star = argmin_first(r.validation_mae) + 1;
  r.k_test_best = argmin_first(r.test_mae) + 1;
  r.selected = std::move(stations[r.k_star - 1]);
  return r;
}

std::vector<const BenchmarkRun*> BenchmarkSuite::runs() const {
  std::vector<const BenchmarkRun*> out;
  for (const auto& s : singles) out.push_back(&s);
  if (none) out.push_back(&*none);
  if (all) out.push_back(&*all);
  if (average) out.push_back(&*average);
  if (hongtao) out.push_back(&hongtao->selected);
  return out;
}

BenchmarkSuite run_suite(const SampleSets& sets, const SplitSpec& split, int n_locations,
                         const SuiteOptions& options) {
  auto make = [&](BenchmarkSpec s) {
    s.hidden = options.hidden;
    return s;
  };
  std::vector<BenchmarkSpec> specs;
  if (options.include_singles || options.include_hongtao) {
    for (int i = 0; i < n_locations; ++i) specs.push_back(make(BenchmarkSpec::single(i, options.trainer)));
  }
  specs.push_back(make(BenchmarkSpec::none(options.trainer)));
  specs.push_back(make(BenchmarkSpec::all(options.trainer)));
  specs.push_back(make(BenchmarkSpec::average(options.trainer)));

  auto runs = run_many(specs, options.jobs, [&](const BenchmarkSpec& s) {
    return run_benchmark(s, sets, split, options.hours);
  });

  BenchmarkSuite suite;
  std::size_t k = 0;
  if (options.include_singles || options.include_hongtao) {
    for (int i = 0; i < n_locations; ++i) suite.singles.push_back(std::move(runs[k++]));
  }
  suite.none = std::move(runs[k++]);
  suite.all = std::move(runs[k++]);
  suite.average = std::move(runs[k++]);
  if (options.include_hongtao) {
    suite.hongtao = hongtao_select(sets, split, n_locations, options.trainer, options.hidden,
                                   options.hours, suite.singles);
  }
  if (!options.include_singles) suite.singles.clear();

  check_shared_configuration(suite);
  return suite;
}

void check_shared_configuration(const BenchmarkSuite& suite) {
  const auto runs = suite.runs();
  if (runs.empty()) return;
  const auto& reference = runs.front()->shared_fingerprint;
  for (const auto* run : runs) {
    if (run->shared_fingerprint != reference) {
      throw Error(ErrorKind::config, "benchmark " + run->spec.name() +
                                         " does not share the trainer/seed/split configuration");
    }
  }
}

}  // namespace geoload
