#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "geoload/benchmarks.hpp"
#include "geoload/config.hpp"
#include "geoload/data.hpp"
#include "geoload/error.hpp"
#include "geoload/explain.hpp"
#include "geoload/persistence.hpp"
#include "geoload/pipeline.hpp"
#include "geoload/report.hpp"

namespace fs = std::filesystem;
using namespace geoload;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool force = false;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.set_seed(*g.seed);
  if (g.jobs < 1) throw Error(ErrorKind::config, "--jobs must be >= 1");
  return cfg;
}

fs::path data_dir(const RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  return "data";
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::vector<Sample> range_samples(const Dataset& data, const SplitSpec& split, const std::string& range) {
  const auto& n = split.normalization;
  if (range == "test") return build_range(data.load, data.weather, n, split.test_begin, split.test_end);
  if (range == "validation") {
    return build_range(data.load, data.weather, n, split.validation_begin, split.validation_end);
  }
  if (range == "train") return build_range(data.load, data.weather, n, split.train_begin, split.train_end);
  if (range == "all") return build_range(data.load, data.weather, n, split.train_begin, split.test_end);
  throw Error(ErrorKind::config, "unknown range '" + range + "' (expected train, validation, test or all)");
}

Dataset load_dataset(const fs::path& dir) {
  spdlog::info("reading data from {}", dir.string());
  auto data = ingest_directory(dir);
  validate_dataset(data);
  spdlog::info("{} locations, {} hours", data.locations.size(), data.load.hours());
  return data;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out = "data";
  std::optional<int> locations, days, dominant;
  std::optional<double> noise;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.locations) cfg.synth.locations = *a.locations;
  if (a.days) cfg.synth.days = *a.days;
  if (a.dominant) cfg.synth.dominant = *a.dominant;
  if (a.noise) cfg.synth.noise_level = *a.noise;
  cfg.validate();

  const fs::path dir = a.out;
  const fs::path files[] = {dir / "locations.csv", dir / "load.csv", dir / "weather.csv",
                            dir / "ground_truth.json"};
  if (!g.force) {
    for (const auto& f : files) {
      if (fs::exists(f)) {
        throw Error(ErrorKind::validation, f.string() + " exists; pass --force to overwrite");
      }
    }
  }
  fs::create_directories(dir);
  const auto truth = cfg.synth.ground_truth(cfg.seed);
  const auto data = synthesize(cfg.synth.locations, cfg.synth.days, truth);
  write_locations_csv(files[0], data.locations);
  write_load_csv(files[1], data.load);
  write_weather_csv(files[2], data.weather);

  int dominant = 0;
  for (std::size_t i = 1; i < truth.weights.size(); ++i) {
    if (truth.weights[i] > truth.weights[dominant]) dominant = static_cast<int>(i);
  }
  nlohmann::json j;
  j["config_hash"] = cfg.hash();
  j["seed"] = cfg.seed;
  j["locations"] = cfg.synth.locations;
  j["days"] = cfg.synth.days;
  j["weights"] = truth.weights;
  j["dominant"] = dominant;
  j["noise_level"] = truth.noise_level;
  j["heat_island_c"] = truth.heat_island_c;
  j["local_anomaly_c"] = truth.local_anomaly_c;
  j["correlation_length_deg"] = truth.correlation_length_deg;
  j["start"] = format_timestamp(truth.start);
  j["data_fingerprint"] = dataset_fingerprint(data);
  write_text(files[3], j.dump(1) + "\n");
  std::cout << "wrote " << cfg.synth.locations << " locations x " << cfg.synth.days << " days to "
            << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string model = "model.json";
  std::string history;
  bool no_mf = false;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.no_mf) cfg.architecture.gcn_dims.clear();
  cfg.validate();
  const auto data = load_dataset(data_dir(cfg, a.data));
  const auto split = plan_split(data, cfg.split);
  const auto sets = build_samples(data.load, data.weather, split);
  spdlog::info("samples: train {}, validation {}, test {}", sets.train.size(), sets.validation.size(),
               sets.test.size());
  const auto adjacency = build_adjacency(data.locations, cfg.graph);
  auto run = train_integrated(cfg.architecture, adjacency, sets, split, cfg.trainer, cfg.hours);

  const ArtifactStamp stamp{cfg.hash(), cfg.seed};
  ModelFile file{run.model, cfg.graph, data.locations, split, cfg.trainer, run.best_epoch,
                 stamp.config_hash, dataset_fingerprint(data)};
  const fs::path model_path = a.model;
  ensure_parent(model_path);
  save_model(model_path, file);
  const fs::path history = a.history.empty() ? model_path.parent_path() / "history.csv" : fs::path(a.history);
  write_history_csv(history, run.history, stamp);

  if (run.diverged) {
    throw Error(ErrorKind::numeric, "training diverged after " + std::to_string(run.history.size()) +
                                        " epochs; saved the best earlier parameters to " +
                                        model_path.string());
  }
  std::cout << "trained " << (a.no_mf ? "no-MF " : "") << "model: " << run.history.size()
            << " epochs, best epoch " << run.best_epoch << ", test MAPE " << run.test.mape
            << "%, test MAE " << run.test.mae << " MW\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
  std::string data;
  std::string model = "model.json";
  std::string out = "forecasts.csv";
  std::string range = "test";
};

int cmd_forecast(const Globals& g, const ForecastArgs& a) {
  RunConfig cfg = resolve_config(g);
  const auto file = load_model(a.model);
  const auto data = load_dataset(data_dir(cfg, a.data));
  check_compatibility(file, data);
  const auto samples = range_samples(data, file.split, a.range);
  if (samples.empty()) throw Error(ErrorKind::validation, "range '" + a.range + "' has no samples");
  const auto series = forecast_series(file.model, samples, file.split.normalization.target);
  ensure_parent(a.out);
  write_forecasts_csv(a.out, series, {file.config_hash, file.model.seed()});
  std::cout << "wrote " << series.times.size() << " forecasts to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ExplainArgs {
  std::string data;
  std::string model = "model.json";
  std::string out = "explanation.json";
  std::string csv;
  std::string range = "test";
  std::optional<int> samples, stride, top_n;
  std::optional<std::string> sampling;
  bool exact = false;
};

int cmd_explain(const Globals& g, const ExplainArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.samples) cfg.explain.samples = *a.samples;
  if (a.stride) cfg.explain.stride = *a.stride;
  if (a.top_n) cfg.explain.top_n = *a.top_n;
  if (a.sampling) cfg.explain.sampling = mask_sampling_from_string(*a.sampling);
  if (a.exact) cfg.explain.exact = true;
  cfg.validate();

  const auto file = load_model(a.model);
  const int n = file.model.nodes();
  if (cfg.explain.exact) {
    if (n > cfg.explain.max_exact_nodes) {
      throw Error(ErrorKind::config, "exact enumeration refused for n = " + std::to_string(n) +
                                         " (limit " + std::to_string(cfg.explain.max_exact_nodes) +
                                         "); drop --exact to use sampled masks");
    }
  } else if (cfg.explain.samples < min_mask_count(n)) {
    throw Error(ErrorKind::config, "--samples " + std::to_string(cfg.explain.samples) +
                                       " is below 2n+2 = " + std::to_string(min_mask_count(n)) +
                                       " for n = " + std::to_string(n));
  }
  const auto data = load_dataset(data_dir(cfg, a.data));
  check_compatibility(file, data);
  const auto all = range_samples(data, file.split, a.range);
  std::vector<Sample> samples;
  for (std::size_t k = 0; k < all.size(); k += static_cast<std::size_t>(cfg.explain.stride)) {
    samples.push_back(all[k]);
  }
  if (samples.empty()) throw Error(ErrorKind::validation, "range '" + a.range + "' has no samples");
  spdlog::info("explaining {} samples with {}", samples.size(),
               cfg.explain.exact ? std::string("exact enumeration")
                                 : std::to_string(cfg.explain.samples) + " masks");
  const auto imp = explain_locations(file.model, samples, cfg.explain_options(g.jobs),
                                     file.split.normalization.target, "MW");
  if (imp.condition_warning) {
    spdlog::warn("ill-conditioned regression (condition number {:.3g}); consider more masks",
                 imp.max_condition_number);
  }
  const ArtifactStamp stamp{cfg.hash(), cfg.seed};
  ensure_parent(a.out);
  write_text(a.out, explanation_json(imp, stamp, cfg.explain.top_n));
  const fs::path csv_path = a.csv.empty() ? fs::path(a.out).replace_extension(".csv") : fs::path(a.csv);
  write_explanation_csv(csv_path, imp, stamp);
  std::cout << "ranking:";
  for (int id : imp.ranking) std::cout << ' ' << id;
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchmarkArgs {
  std::string data;
  std::string model;
  std::string out = "benchmark_report.json";
  std::optional<std::string> suite;
};

int cmd_benchmark(const Globals& g, const BenchmarkArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.suite) cfg.benchmark.suite = *a.suite;
  cfg.validate();
  const auto data = load_dataset(data_dir(cfg, a.data));
  const int n = static_cast<int>(data.locations.size());

  std::optional<ModelFile> file;
  if (!a.model.empty()) {
    file = load_model(a.model);
    check_compatibility(*file, data);
  }
  const SplitSpec split = file ? file->split : plan_split(data, cfg.split);
  const auto sets = build_samples(data.load, data.weather, split);
  TrainerConfig trainer = file ? file->trainer : cfg.trainer;

  SuiteOptions options;
  options.trainer = trainer;
  options.hidden = cfg.benchmark.hidden;
  options.hours = cfg.hours;
  options.include_singles = cfg.benchmark.suite == "full";
  options.include_hongtao = cfg.benchmark.suite == "full";
  options.jobs = g.jobs;
  spdlog::info("running {} benchmark suite", cfg.benchmark.suite);
  const auto suite = run_suite(sets, split, n, options);

  NamedResult proposed;
  proposed.name = "proposed";
  proposed.kind = "integrated";
  if (file) {
    const auto series = forecast_series(file->model, sets.test, split.normalization.target);
    proposed.test = stratified(series.actual, series.forecast, series.times, cfg.hours);
    const auto val = forecast_series(file->model, sets.validation, split.normalization.target);
    proposed.validation_mae = mae(val.actual, val.forecast);
    proposed.best_epoch = file->best_epoch;
  } else {
    const auto adjacency = build_adjacency(data.locations, cfg.graph);
    auto run = train_integrated(cfg.architecture, adjacency, sets, split, trainer, cfg.hours);
    if (run.diverged) throw Error(ErrorKind::numeric, "integrated model diverged during training");
    proposed.test = run.test;
    proposed.validation_mae = run.validation.mae;
    proposed.best_epoch = run.best_epoch;
  }

  ensure_parent(a.out);
  write_text(a.out, benchmark_report_json(suite, proposed, {cfg.hash(), cfg.seed},
                                          dataset_fingerprint(data)));
  for (const auto* r : suite.runs()) {
    std::cout << r->spec.name() << " MAPE " << r->test.mape << "\n";
  }
  std::cout << "proposed MAPE " << proposed.test.mape << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string forecasts = "forecasts.csv";
  std::string json_out = "metrics.json";
  std::string csv_out = "metrics.csv";
};

int cmd_report(const Globals& g, const ReportArgs& a) {
  RunConfig cfg = resolve_config(g);
  ArtifactStamp stamp;
  const auto series = read_forecasts_csv(a.forecasts, &stamp);
  if (series.times.empty()) throw Error(ErrorKind::validation, a.forecasts + " has no rows");
  const auto report = stratified(series.actual, series.forecast, series.times, cfg.hours);
  if (!report.composite_available()) {
    spdlog::warn("noon or night hour missing from {}; composites unavailable", a.forecasts);
  }
  ensure_parent(a.json_out);
  write_text(a.json_out, metrics_json(report, stamp));
  ensure_parent(a.csv_out);
  write_metrics_csv(a.csv_out, report, stamp);
  std::cout << "MAPE " << report.mape << "% MAE " << report.mae << " MW\n";
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("geoload");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("GEOLOAD_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("unknown GEOLOAD_LOG level '{}'", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Geo-distributed day-ahead load forecasting with graph convolutions and Shapley "
               "location importance"};
  app.require_subcommand(1);
  // Global flags may appear before or after the subcommand.
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--jobs", g.jobs, "Worker threads for independent evaluations");
  app.add_flag("--force", g.force, "Overwrite existing outputs");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset with planted location importance");
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--locations", synth.locations, "Number of locations");
  s->add_option("--days", synth.days, "Number of days");
  s->add_option("--dominant", synth.dominant, "Location with the largest planted weight");
  s->add_option("--noise", synth.noise, "Load noise as a fraction of 1000 MW");

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "Train the integrated model");
  t->add_option("--data", train_args.data, "Directory with locations.csv, load.csv, weather.csv");
  t->add_option("--model", train_args.model, "Output model file");
  t->add_option("--history", train_args.history, "Output history CSV (default: next to the model)");
  t->add_flag("--no-mf", train_args.no_mf, "Bypass the graph generator (no-MF baseline)");

  ForecastArgs fc;
  auto* f = app.add_subcommand("forecast", "Write hourly forecasts for a data range");
  f->add_option("--data", fc.data, "Data directory");
  f->add_option("--model", fc.model, "Model file");
  f->add_option("--out", fc.out, "Output CSV");
  f->add_option("--range", fc.range, "train, validation, test or all");

  ExplainArgs ex;
  auto* e = app.add_subcommand("explain", "Score location importance with Shapley values");
  e->add_option("--data", ex.data, "Data directory");
  e->add_option("--model", ex.model, "Model file");
  e->add_option("--out", ex.out, "Output JSON");
  e->add_option("--csv", ex.csv, "Output CSV (default: JSON path with .csv)");
  e->add_option("--range", ex.range, "train, validation, test or all");
  e->add_option("--samples", ex.samples, "Mask count P per explained hour");
  e->add_option("--stride", ex.stride, "Explain every k-th hour of the range");
  e->add_option("--top-n", ex.top_n, "Keep only the top N locations in the ranking");
  e->add_option("--sampling", ex.sampling, "size_stratified or uniform");
  e->add_flag("--exact", ex.exact, "Enumerate all coalitions");

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "Compare against the benchmark forecasters");
  b->add_option("--data", bench.data, "Data directory");
  b->add_option("--model", bench.model, "Trained integrated model (default: train one)");
  b->add_option("--out", bench.out, "Output JSON");
  b->add_option("--suite", bench.suite, "full or basic");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Compute metrics from a forecasts CSV");
  r->add_option("--forecasts", rep.forecasts, "Forecasts CSV");
  r->add_option("--json", rep.json_out, "Output metrics JSON");
  r->add_option("--csv", rep.csv_out, "Output metrics CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (*s) return cmd_synth(g, synth);
    if (*t) return cmd_train(g, train_args);
    if (*f) return cmd_forecast(g, fc);
    if (*e) return cmd_explain(g, ex);
    if (*b) return cmd_benchmark(g, bench);
    if (*r) return cmd_report(g, rep);
  } catch (const Error& err) {
    spdlog::error("{} error: {}", to_string(err.kind()), err.what());
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return 1;
  }
  return 1;
}
