#include "geoload/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "geoload/csv.hpp"
#include "geoload/error.hpp"

namespace geoload {
namespace {

using std::chrono::hours;

constexpr int kMaxListed = 10;

std::string list_missing(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size() && i < kMaxListed; ++i) {
    out += (i ? ", " : "") + items[i];
  }
  if (items.size() > kMaxListed) out += ", ... (" + std::to_string(items.size()) + " total)";
  return out;
}

int hour_offset(Timestamp start, Timestamp t) {
  return static_cast<int>((t - start).count());
}

}  // namespace

Dataset ingest(const std::filesystem::path& load_csv, const std::filesystem::path& weather_csv,
               const std::filesystem::path& locations_csv) {
  Dataset data;
  data.locations = read_locations_csv(locations_csv);
  const int n = static_cast<int>(data.locations.size());

  // Load: sort by timestamp, then demand a gap-free index.
  auto load_table = csv::read(load_csv);
  csv::require_header(load_table, {"timestamp", "load_mw"}, load_csv);
  if (load_table.rows.empty()) throw Error(ErrorKind::validation, load_csv.string() + ": no rows");
  std::map<Timestamp, double> load_by_time;
  for (const auto& row : load_table.rows) {
    Timestamp t;
    try {
      t = parse_timestamp(row.fields[0]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, load_csv.string() + ":" + std::to_string(row.line) + ": " + e.what());
    }
    const double v = csv::to_double(row.fields[1], row, "load_mw", load_csv);
    if (!(v > 0.0)) {
      throw Error(ErrorKind::validation, load_csv.string() + ":" + std::to_string(row.line) +
                                             ": load must be positive (MAPE requires nonzero "
                                             "actuals), got " + row.fields[1]);
    }
    if (!load_by_time.emplace(t, v).second) {
      throw Error(ErrorKind::validation, load_csv.string() + ":" + std::to_string(row.line) +
                                             ": duplicate timestamp " + row.fields[0]);
    }
  }
  const Timestamp start = load_by_time.begin()->first;
  const int total = hour_offset(start, load_by_time.rbegin()->first) + 1;
  if (static_cast<int>(load_by_time.size()) != total) {
    std::vector<std::string> missing;
    for (int h = 0; h < total; ++h) {
      if (!load_by_time.count(start + hours{h})) missing.push_back(format_timestamp(start + hours{h}));
    }
    throw Error(ErrorKind::gap, "load series has gaps at " + list_missing(missing));
  }
  data.load.start = start;
  data.load.load_mw.reserve(load_by_time.size());
  for (const auto& [t, v] : load_by_time) data.load.load_mw.push_back(v);

  // Weather: every (location, hour) of the load index exactly once.
  auto weather_table = csv::read(weather_csv);
  csv::require_header(weather_table, {"timestamp", "location_id", "temp_c", "rh_pct"}, weather_csv);
  data.weather.start = start;
  data.weather.temp_c = Eigen::MatrixXd::Constant(total, n, std::numeric_limits<double>::quiet_NaN());
  data.weather.rh_pct = data.weather.temp_c;
  for (const auto& row : weather_table.rows) {
    const auto where = weather_csv.string() + ":" + std::to_string(row.line) + ": ";
    Timestamp t;
    try {
      t = parse_timestamp(row.fields[0]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where + e.what());
    }
    const auto id = csv::to_int(row.fields[1], row, "location_id", weather_csv);
    if (id < 0 || id >= n) {
      throw Error(ErrorKind::reference, where + "unknown location_id " + row.fields[1]);
    }
    const double temp = csv::to_double(row.fields[2], row, "temp_c", weather_csv);
    const double rh = csv::to_double(row.fields[3], row, "rh_pct", weather_csv);
    if (rh < 0.0 || rh > 100.0) {
      throw Error(ErrorKind::validation, where + "relative humidity outside [0, 100]: " + row.fields[3]);
    }
    const int h = hour_offset(start, t);
    if (h < 0 || h >= total) {
      throw Error(ErrorKind::validation,
                  where + "timestamp " + row.fields[0] + " outside the load index");
    }
    if (!std::isnan(data.weather.temp_c(h, id))) {
      throw Error(ErrorKind::validation, where + "duplicate record for location " +
                                             std::to_string(id) + " at " + row.fields[0]);
    }
    data.weather.temp_c(h, id) = temp;
    data.weather.rh_pct(h, id) = rh;
  }
  std::vector<std::string> missing;
  for (int id = 0; id < n; ++id) {
    for (int h = 0; h < total; ++h) {
      if (std::isnan(data.weather.temp_c(h, id))) {
        missing.push_back("location " + std::to_string(id) + " hour " +
                          std::to_string(hour_of_day(start + hours{h})) + " (" +
                          format_timestamp(start + hours{h}) + ")");
      }
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorKind::gap, "weather series has gaps: " + list_missing(missing));
  }
  return data;
}

Dataset ingest_directory(const std::filesystem::path& dir) {
  return ingest(dir / "load.csv", dir / "weather.csv", dir / "locations.csv");
}

void write_load_csv(const std::filesystem::path& path, const LoadSeries& load) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "timestamp,load_mw\n";
  for (int h = 0; h < load.hours(); ++h) {
    out << format_timestamp(load.at(h)) << ',' << csv::format_double(load.load_mw[h]) << '\n';
  }
}

void write_weather_csv(const std::filesystem::path& path, const WeatherSeries& weather) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "timestamp,location_id,temp_c,rh_pct\n";
  for (int h = 0; h < weather.hours(); ++h) {
    const auto stamp = format_timestamp(weather.start + hours{h});
    for (int i = 0; i < weather.locations(); ++i) {
      out << stamp << ',' << i << ',' << csv::format_double(weather.temp_c(h, i)) << ','
          << csv::format_double(weather.rh_pct(h, i)) << '\n';
    }
  }
}

void validate_dataset(const Dataset& data) {
  validate_locations(data.locations);
  const int n = static_cast<int>(data.locations.size());
  if (data.weather.locations() != n) {
    throw Error(ErrorKind::validation, "weather columns do not match location count");
  }
  if (data.weather.hours() != data.load.hours() || data.weather.start != data.load.start) {
    throw Error(ErrorKind::validation, "weather and load are not on the same hourly index");
  }
  for (double v : data.load.load_mw) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::validation, "load must be positive");
  }
  if (!data.weather.temp_c.allFinite() || !data.weather.rh_pct.allFinite()) {
    throw Error(ErrorKind::validation, "weather contains non-finite values");
  }
  if (data.weather.rh_pct.size() > 0 &&
      (data.weather.rh_pct.minCoeff() < 0.0 || data.weather.rh_pct.maxCoeff() > 100.0)) {
    throw Error(ErrorKind::validation, "relative humidity outside [0, 100]");
  }
}

// ---------------------------------------------------------------------------
// Synthetic generator

std::vector<Location> synthetic_grid(int n_locations) {
  const int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_locations))));
  const int cols = (n_locations + rows - 1) / rows;
  std::vector<Location> out;
  for (int k = 0; k < n_locations; ++k) {
    out.push_back({k, 30.0 + 0.25 * (k / cols), 114.0 + 0.25 * (k % cols)});
  }
  return out;
}

std::vector<double> spatial_weights(int n_locations, int dominant) {
  if (dominant < 0 || dominant >= n_locations) {
    throw Error(ErrorKind::config, "dominant location out of range");
  }
  const auto grid = synthetic_grid(n_locations);
  std::vector<double> w(n_locations);
  for (int i = 0; i < n_locations; ++i) {
    const double d_lat = (grid[i].lat - grid[dominant].lat) / 0.25;
    const double d_lon = (grid[i].lon - grid[dominant].lon) / 0.25;
    w[i] = std::exp(-0.5 * (d_lat * d_lat + d_lon * d_lon));
  }
  return w;
}

double synthetic_base_load(Timestamp t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const int h = hour_of_day(t);
  const double evening = std::exp(-0.5 * (h - 19) * (h - 19) / 4.0);
  double shape = 0.85 + 0.10 * std::sin(two_pi * (h - 8) / 24.0) + 0.08 * evening;
  const int wd = weekday(t);
  if (wd == 5) shape *= 0.93;
  if (wd == 6) shape *= 0.88;
  return 1000.0 * shape;
}

double synthetic_temperature_response(double temp_c) {
  constexpr double comfort = 19.0;
  return temp_c > comfort ? 30.0 * (temp_c - comfort) : 15.0 * (comfort - temp_c);
}

Dataset synthesize(int n_locations, int n_days, const SyntheticGroundTruth& truth) {
  if (n_locations < 2) throw Error(ErrorKind::config, "synthesize needs at least 2 locations");
  if (n_days < 60) throw Error(ErrorKind::config, "synthesize needs at least 60 days");
  if (static_cast<int>(truth.weights.size()) != n_locations) {
    throw Error(ErrorKind::validation, "ground-truth weights must have one entry per location");
  }
  double w_sum = 0.0, w_max = 0.0;
  for (double w : truth.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::validation, "ground-truth weights must be finite and >= 0");
    }
    w_sum += w;
    w_max = std::max(w_max, w);
  }
  if (!(w_sum > 0.0)) throw Error(ErrorKind::validation, "ground-truth weights are all zero");
  if (std::count(truth.weights.begin(), truth.weights.end(), w_max) != 1) {
    throw Error(ErrorKind::validation, "ground-truth weights need one strictly dominant location");
  }
  if (!(truth.noise_level >= 0.0)) throw Error(ErrorKind::validation, "noise level must be >= 0");

  const int n = n_locations;
  const int total = n_days * 24;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  Dataset data;
  data.locations = synthetic_grid(n);

  // Spatial covariance of the local anomaly field.
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = std::hypot(data.locations[i].lat - data.locations[j].lat,
                                  data.locations[i].lon - data.locations[j].lon);
      cov(i, j) = std::exp(-d / truth.correlation_length_deg);
    }
  }
  const Eigen::MatrixXd chol = cov.llt().matrixL();

  std::mt19937_64 rng(truth.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  constexpr double shared_rho = 0.995;
  constexpr double local_rho = 0.97;
  constexpr double humid_rho = 0.98;
  double shared = 0.0;
  Eigen::VectorXd local = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd humid = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z(n);

  data.load.start = truth.start;
  data.load.load_mw.resize(total);
  data.weather.start = truth.start;
  data.weather.temp_c.resize(total, n);
  data.weather.rh_pct.resize(total, n);

  for (int h = 0; h < total; ++h) {
    const Timestamp t = truth.start + hours{h};
    const double season = 17.0 + 10.0 * std::sin(two_pi * (day_of_year(t) - 105) / 365.0);
    const double diurnal = 4.0 * std::sin(two_pi * (hour_of_day(t) - 9) / 24.0);

    shared = shared_rho * shared + std::sqrt(1.0 - shared_rho * shared_rho) * 2.5 * gauss(rng);
    for (int i = 0; i < n; ++i) z(i) = gauss(rng);
    local = local_rho * local +
            std::sqrt(1.0 - local_rho * local_rho) * truth.local_anomaly_c * (chol * z);
    for (int i = 0; i < n; ++i) z(i) = gauss(rng);
    humid = humid_rho * humid + std::sqrt(1.0 - humid_rho * humid_rho) * 6.0 * z;

    double t_eff = 0.0;
    for (int i = 0; i < n; ++i) {
      const double island = truth.heat_island_c * truth.weights[i] / w_max;
      const double temp = season + diurnal + shared + local(i) + island;
      const double rh = 65.0 - 1.5 * (diurnal + local(i) + island) + humid(i);
      data.weather.temp_c(h, i) = temp;
      data.weather.rh_pct(h, i) = std::clamp(rh, 5.0, 100.0);
      t_eff += truth.weights[i] / w_sum * temp;
    }
    const double noise = truth.noise_level * 1000.0 * gauss(rng);
    data.load.load_mw[h] =
        std::max(1.0, synthetic_base_load(t) + synthetic_temperature_response(t_eff) + noise);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Samples and splits

Timestamp first_usable(const LoadSeries& load) { return load.start + hours{24 * kLagDays}; }

namespace {

FeatureStats stats_of(const std::vector<double>& values, const char* name) {
  if (values.empty()) throw Error(ErrorKind::validation, "empty training range");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) {
    throw Error(ErrorKind::validation,
                std::string("feature '") + name + "' is constant over the training range");
  }
  return {mean, sd};
}

}  // namespace

Normalization compute_normalization(const LoadSeries& load, const WeatherSeries& weather,
                                    Timestamp train_begin, Timestamp train_end) {
  const int b = hour_offset(load.start, train_begin);
  const int e = hour_offset(load.start, train_end);
  if (b < 24 * kLagDays || e > load.hours() || b >= e) {
    throw Error(ErrorKind::validation, "training range outside the usable data");
  }
  std::vector<double> temps, rhs, targets;
  std::array<std::vector<double>, kLagDays> lags;
  for (int h = b; h < e; ++h) {
    for (int i = 0; i < weather.locations(); ++i) {
      temps.push_back(weather.temp_c(h, i));
      rhs.push_back(weather.rh_pct(h, i));
    }
    targets.push_back(load.load_mw[h]);
    for (int k = 0; k < kLagDays; ++k) lags[k].push_back(load.load_mw[h - 24 * (k + 1)]);
  }
  Normalization norm;
  norm.temp = stats_of(temps, "temp_c");
  norm.rh = stats_of(rhs, "rh_pct");
  norm.target = stats_of(targets, "load_mw");
  for (int k = 0; k < kLagDays; ++k) norm.lags[k] = stats_of(lags[k], "load lag");
  return norm;
}

SplitSpec plan_split(const Dataset& data, const SplitOptions& options) {
  validate_dataset(data);
  const Timestamp usable = first_usable(data.load);
  const Timestamp end = data.load.at(data.load.hours());
  const int usable_days = static_cast<int>((end - usable).count() / 24);
  if (usable_days < 3) {
    throw Error(ErrorKind::validation,
                "insufficient history: the first usable timestamp is " + format_timestamp(usable) +
                    " and at least 3 whole days after it are needed for train/validation/test");
  }

  SplitSpec split;
  split.train_begin = usable;
  split.test_end = end;
  if (options.test_begin) {
    split.test_begin = *options.test_begin;
  } else {
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
      throw Error(ErrorKind::config, "test_fraction must lie in (0, 1)");
    }
    const int test_days = std::max(1, static_cast<int>(std::lround(usable_days * options.test_fraction)));
    split.test_begin = usable + hours{24 * (usable_days - test_days)};
  }
  const int train_days = static_cast<int>((split.test_begin - usable).count() / 24);
  if (options.validation_begin) {
    split.validation_begin = *options.validation_begin;
  } else {
    if (!(options.validation_fraction > 0.0 && options.validation_fraction < 1.0)) {
      throw Error(ErrorKind::config, "validation_fraction must lie in (0, 1)");
    }
    const int val_days =
        std::max(1, static_cast<int>(std::lround(train_days * options.validation_fraction)));
    split.validation_begin = usable + hours{24 * (train_days - val_days)};
  }
  split.train_end = split.validation_begin;
  split.validation_end = split.test_begin;

  if (!(split.train_begin < split.train_end && split.validation_begin < split.validation_end &&
        split.test_begin < split.test_end)) {
    throw Error(ErrorKind::validation,
                "split ranges must be non-empty and chronological; first usable timestamp is " +
                    format_timestamp(usable));
  }
  split.normalization =
      compute_normalization(data.load, data.weather, split.train_begin, split.train_end);
  return split;
}

std::vector<Sample> build_range(const LoadSeries& load, const WeatherSeries& weather,
                                const Normalization& norm, Timestamp begin, Timestamp end) {
  const int b = hour_offset(load.start, begin);
  const int e = hour_offset(load.start, end);
  if (b < 24 * kLagDays) {
    throw Error(ErrorKind::validation, "insufficient history: the first usable timestamp is " +
                                           format_timestamp(first_usable(load)));
  }
  if (e > load.hours() || e > weather.hours()) {
    throw Error(ErrorKind::validation, "sample range extends past the end of the data");
  }
  const int n = weather.locations();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(std::max(0, e - b)));
  for (int h = b; h < e; ++h) {
    Sample s;
    s.time = load.at(h);
    s.node_features.resize(n, kNodeFeatures);
    for (int i = 0; i < n; ++i) {
      s.node_features(i, 0) = norm.temp.apply(weather.temp_c(h, i));
      s.node_features(i, 1) = norm.rh.apply(weather.rh_pct(h, i));
    }
    s.exo = Eigen::VectorXd::Zero(kExoDim);
    s.exo(kExoMonth + month_index(s.time)) = 1.0;
    s.exo(kExoWeekday + weekday(s.time)) = 1.0;
    s.exo(kExoHour + hour_of_day(s.time)) = 1.0;
    for (int k = 0; k < kLagDays; ++k) {
      s.exo(kExoLags + k) = norm.lags[k].apply(load.load_mw[h - 24 * (k + 1)]);
    }
    s.target = norm.target.apply(load.load_mw[h]);
    out.push_back(std::move(s));
  }
  return out;
}

SampleSets build_samples(const LoadSeries& load, const WeatherSeries& weather,
                         const SplitSpec& split) {
  SampleSets sets;
  const auto& norm = split.normalization;
  sets.train = build_range(load, weather, norm, split.train_begin, split.train_end);
  sets.validation = build_range(load, weather, norm, split.validation_begin, split.validation_end);
  sets.test = build_range(load, weather, norm, split.test_begin, split.test_end);
  return sets;
}

}  // namespace geoload
