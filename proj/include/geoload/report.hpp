#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geoload/benchmarks.hpp"
#include "geoload/explain.hpp"
#include "geoload/metrics.hpp"
#include "geoload/trainer.hpp"

namespace geoload {

/// Provenance embedded in every output artifact.
struct ArtifactStamp {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// The eight columns of the benchmark tables, in report order.
std::vector<std::string> metric_columns();
/// Values for metric_columns(); unavailable strata are empty.
std::vector<std::optional<double>> metric_values(const MetricReport& report);

/// JSON text of an explanation. `top_n` > 0 truncates the ranking.
std::string explanation_json(const LocationImportance& importance, const ArtifactStamp& stamp,
                             int top_n = 0);
void write_explanation_csv(const std::filesystem::path& path, const LocationImportance& importance,
                           const ArtifactStamp& stamp);

struct NamedResult {
  std::string name;
  std::string kind;
  std::vector<int> locations;
  MetricReport test;
  double validation_mae = 0.0;
  int best_epoch = 0;
};

NamedResult named_result(const BenchmarkRun& run);

/// JSON text of a benchmark comparison; `proposed` is the integrated model.
std::string benchmark_report_json(const BenchmarkSuite& suite,
                                  const std::optional<NamedResult>& proposed,
                                  const ArtifactStamp& stamp, const std::string& data_fingerprint);

std::string metrics_json(const MetricReport& report, const ArtifactStamp& stamp);
void write_metrics_csv(const std::filesystem::path& path, const MetricReport& report,
                       const ArtifactStamp& stamp);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history,
                       const ArtifactStamp& stamp);

void write_forecasts_csv(const std::filesystem::path& path, const ForecastSeries& series,
                         const ArtifactStamp& stamp);
/// Reads `timestamp,forecast_mw,actual_mw`; the stamp comes from the
/// leading comment line when present.
ForecastSeries read_forecasts_csv(const std::filesystem::path& path, ArtifactStamp* stamp = nullptr);

/// Writes text to a file, throwing an io error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace geoload
