#pragma once

#include <optional>
#include <span>

#include "geoload/time.hpp"

namespace geoload {

/// Mean absolute error in the units of the inputs.
double mae(std::span<const double> actuals, std::span<const double> forecasts);

/// Mean absolute percentage error, in percent. The denominator is the
/// actual value at the same index.
double mape(std::span<const double> actuals, std::span<const double> forecasts);

struct MetricHours {
  int noon = 11;
  int night = 20;
};

/// Overall, noon-hour and night-hour errors plus the 0.6/0.2/0.2 composites.
/// Strata with no samples leave their fields (and the composites) empty.
struct MetricReport {
  double mae = 0.0;
  double mape = 0.0;
  std::optional<double> mae_noon;
  std::optional<double> mape_noon;
  std::optional<double> mae_night;
  std::optional<double> mape_night;
  std::optional<double> mae_com;
  std::optional<double> mape_com;
  int count = 0;
  int noon_count = 0;
  int night_count = 0;

  bool composite_available() const { return mae_com.has_value(); }
};

inline constexpr double kCompositeOverallWeight = 0.6;
inline constexpr double kCompositeNoonWeight = 0.2;
inline constexpr double kCompositeNightWeight = 0.2;

double composite(double overall, double noon, double night);

MetricReport stratified(std::span<const double> actuals, std::span<const double> forecasts,
                        std::span<const Timestamp> timestamps, MetricHours hours = {});

}  // namespace geoload
