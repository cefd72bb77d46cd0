#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "geoload/graph.hpp"
#include "geoload/time.hpp"

namespace geoload {

/// Gap-free hourly load in MW.
struct LoadSeries {
  Timestamp start{};
  std::vector<double> load_mw;

  int hours() const { return static_cast<int>(load_mw.size()); }
  Timestamp at(int hour) const { return start + std::chrono::hours{hour}; }
};

/// Hourly 2 m temperature (deg C) and relative humidity (%) per location,
/// stored hours x locations on one shared gap-free index.
struct WeatherSeries {
  Timestamp start{};
  Eigen::MatrixXd temp_c;
  Eigen::MatrixXd rh_pct;

  int hours() const { return static_cast<int>(temp_c.rows()); }
  int locations() const { return static_cast<int>(temp_c.cols()); }
};

struct Dataset {
  LoadSeries load;
  WeatherSeries weather;
  std::vector<Location> locations;
};

/// Reads load.csv (`timestamp,load_mw`), weather.csv
/// (`timestamp,location_id,temp_c,rh_pct`) and locations.csv and checks that
/// every series covers the same gap-free hourly index.
Dataset ingest(const std::filesystem::path& load_csv, const std::filesystem::path& weather_csv,
               const std::filesystem::path& locations_csv);

/// Reads load.csv, weather.csv and locations.csv from one directory.
Dataset ingest_directory(const std::filesystem::path& dir);

void write_load_csv(const std::filesystem::path& path, const LoadSeries& load);
void write_weather_csv(const std::filesystem::path& path, const WeatherSeries& weather);

/// Checks the domain invariants shared by ingested and synthetic data.
void validate_dataset(const Dataset& data);

/// Planted ground truth for the synthetic generator. `weights[i]` is the
/// share of temperature-sensitive demand located at location i.
struct SyntheticGroundTruth {
  std::vector<double> weights;
  /// Standard deviation of the additive load noise as a fraction of the
  /// 1000 MW base level.
  double noise_level = 0.02;
  std::uint64_t seed = 7;
  Timestamp start = std::chrono::sys_days{std::chrono::year{2021} / 1 / 1} + std::chrono::hours{0};
  /// Urban heat-island warming (deg C) at a location with the largest weight;
  /// scales linearly with weight.
  double heat_island_c = 8.0;
  /// Standard deviation (deg C) of the location-specific temperature anomaly.
  double local_anomaly_c = 2.5;
  /// Spatial correlation length of the local anomaly, in degrees.
  double correlation_length_deg = 0.25;
};

/// Weights decaying with grid distance from `dominant`: exp(-d^2 / 2) with d
/// in grid steps, so `dominant` is the unique maximum.
std::vector<double> spatial_weights(int n_locations, int dominant);

/// Location layout used by the generator: a near-square 0.25 degree grid.
std::vector<Location> synthetic_grid(int n_locations);

/// Base (weather-free) load profile of the generator at time t, in MW.
double synthetic_base_load(Timestamp t);
/// Temperature response of the generator, in MW, to an effective temperature.
double synthetic_temperature_response(double temp_c);

/// Deterministic synthetic dataset with planted location importance.
Dataset synthesize(int n_locations, int n_days, const SyntheticGroundTruth& truth);

inline constexpr int kNodeFeatures = 2;  // temperature, humidity
inline constexpr int kLagDays = 7;
inline constexpr int kExoDim = 12 + 7 + 24 + kLagDays;

/// Offsets into the exogenous feature vector.
inline constexpr int kExoMonth = 0;
inline constexpr int kExoWeekday = 12;
inline constexpr int kExoHour = 19;
inline constexpr int kExoLags = 43;

struct FeatureStats {
  double mean = 0.0;
  double std = 1.0;

  double apply(double x) const { return (x - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

/// Z-score statistics, always computed on the training range only.
struct Normalization {
  FeatureStats temp;
  FeatureStats rh;
  std::array<FeatureStats, kLagDays> lags{};
  FeatureStats target;
};

/// Chronological half-open ranges [begin, end) and training statistics.
struct SplitSpec {
  Timestamp train_begin{}, train_end{};
  Timestamp validation_begin{}, validation_end{};
  Timestamp test_begin{}, test_end{};
  Normalization normalization;
};

struct SplitOptions {
  double test_fraction = 0.2;
  /// Share of the training range (its chronological tail) held out for
  /// early stopping.
  double validation_fraction = 0.1;
  /// Explicit boundaries override the fractions when given.
  std::optional<Timestamp> test_begin;
  std::optional<Timestamp> validation_begin;
};

/// First timestamp with a full lag window.
Timestamp first_usable(const LoadSeries& load);

/// Splits the usable range on whole days and computes training statistics.
SplitSpec plan_split(const Dataset& data, const SplitOptions& options = {});

/// Normalization statistics from the raw values in [train_begin, train_end).
Normalization compute_normalization(const LoadSeries& load, const WeatherSeries& weather,
                                    Timestamp train_begin, Timestamp train_end);

struct Sample {
  Timestamp time{};
  Eigen::MatrixXd node_features;  // n x kNodeFeatures, z-scored
  Eigen::VectorXd exo;            // kExoDim
  double target = 0.0;            // z-scored load
};

struct SampleSets {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
};

/// One sample per hour of each range. Lags are the same-hour loads of the
/// seven preceding days.
SampleSets build_samples(const LoadSeries& load, const WeatherSeries& weather,
                         const SplitSpec& split);

/// Samples for the hours in [begin, end).
std::vector<Sample> build_range(const LoadSeries& load, const WeatherSeries& weather,
                                const Normalization& norm, Timestamp begin, Timestamp end);

}  // namespace geoload
