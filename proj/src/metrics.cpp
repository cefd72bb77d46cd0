#include "geoload/metrics.hpp"

#include <cmath>
#include <vector>

#include "geoload/error.hpp"

namespace geoload {
namespace {

void check_aligned(std::span<const double> actuals, std::span<const double> forecasts) {
  if (actuals.size() != forecasts.size()) {
    throw Error(ErrorKind::shape, "actuals and forecasts differ in length");
  }
  if (actuals.empty()) throw Error(ErrorKind::domain, "metric over an empty set");
}

}  // namespace

double mae(std::span<const double> actuals, std::span<const double> forecasts) {
  check_aligned(actuals, forecasts);
  double sum = 0.0;
  for (std::size_t t = 0; t < actuals.size(); ++t) sum += std::abs(actuals[t] - forecasts[t]);
  return sum / static_cast<double>(actuals.size());
}

double mape(std::span<const double> actuals, std::span<const double> forecasts) {
  check_aligned(actuals, forecasts);
  double sum = 0.0;
  for (std::size_t t = 0; t < actuals.size(); ++t) {
    if (actuals[t] == 0.0) {
      throw Error(ErrorKind::domain, "MAPE undefined: zero actual at index " + std::to_string(t));
    }
    sum += std::abs((actuals[t] - forecasts[t]) / actuals[t]);
  }
  return 100.0 * sum / static_cast<double>(actuals.size());
}

double composite(double overall, double noon, double night) {
  return kCompositeOverallWeight * overall + kCompositeNoonWeight * noon +
         kCompositeNightWeight * night;
}

MetricReport stratified(std::span<const double> actuals, std::span<const double> forecasts,
                        std::span<const Timestamp> timestamps, MetricHours hours) {
  check_aligned(actuals, forecasts);
  if (timestamps.size() != actuals.size()) {
    throw Error(ErrorKind::shape, "timestamps and actuals differ in length");
  }

  MetricReport r;
  r.count = static_cast<int>(actuals.size());
  r.mae = mae(actuals, forecasts);
  r.mape = mape(actuals, forecasts);

  auto subset = [&](int hour, std::optional<double>& mae_out, std::optional<double>& mape_out,
                    int& count) {
    std::vector<double> a, f;
    for (std::size_t t = 0; t < actuals.size(); ++t) {
      if (hour_of_day(timestamps[t]) == hour) {
        a.push_back(actuals[t]);
        f.push_back(forecasts[t]);
      }
    }
    count = static_cast<int>(a.size());
    if (a.empty()) return;
    mae_out = mae(a, f);
    mape_out = mape(a, f);
  };
  subset(hours.noon, r.mae_noon, r.mape_noon, r.noon_count);
  subset(hours.night, r.mae_night, r.mape_night, r.night_count);

  if (r.mae_noon && r.mae_night) {
    r.mae_com = composite(r.mae, *r.mae_noon, *r.mae_night);
    r.mape_com = composite(r.mape, *r.mape_noon, *r.mape_night);
  }
  return r;
}

}  // namespace geoload
