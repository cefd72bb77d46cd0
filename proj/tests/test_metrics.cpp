#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "geoload/error.hpp"
#include "geoload/metrics.hpp"

using namespace geoload;

namespace {

Timestamp at_hour(int day, int hour) {
  return std::chrono::sys_days{std::chrono::year{2022} / 3 / 1} + std::chrono::days{day} +
         std::chrono::hours{hour};
}

}  // namespace

TEST(Mae, Examples) {
  EXPECT_EQ(mae(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0);
  EXPECT_EQ(mae(std::vector<double>{100, 200}, std::vector<double>{110, 190}), 10.0);
  EXPECT_EQ(mae(std::vector<double>{5}, std::vector<double>{3}), 2.0);
}

TEST(Mae, EmptyOrMismatchedIsDomainError) {
  try {
    mae(std::vector<double>{}, std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  EXPECT_THROW(mae(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(Mape, Examples) {
  EXPECT_EQ(mape(std::vector<double>{4, 8}, std::vector<double>{4, 8}), 0.0);
  EXPECT_DOUBLE_EQ(mape(std::vector<double>{100, 200}, std::vector<double>{110, 190}), 7.5);
  EXPECT_EQ(mape(std::vector<double>{100}, std::vector<double>{0}), 100.0);
}

TEST(Mape, ZeroActualIsDomainError) {
  try {
    mape(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Composite, Arithmetic) {
  EXPECT_DOUBLE_EQ(composite(10, 20, 5), 11.0);
  EXPECT_DOUBLE_EQ(composite(3, 3, 3), 3.0);
}

TEST(Stratified, SplitsNoonAndNight) {
  std::vector<double> y, f;
  std::vector<Timestamp> t;
  for (int d = 0; d < 3; ++d) {
    for (int h = 0; h < 24; ++h) {
      y.push_back(100.0);
      f.push_back(h == 11 ? 120.0 : h == 20 ? 95.0 : 101.0);
      t.push_back(at_hour(d, h));
    }
  }
  const auto r = stratified(y, f, t);
  EXPECT_EQ(r.noon_count, 3);
  EXPECT_EQ(r.night_count, 3);
  EXPECT_DOUBLE_EQ(*r.mae_noon, 20.0);
  EXPECT_DOUBLE_EQ(*r.mae_night, 5.0);
  EXPECT_DOUBLE_EQ(*r.mape_noon, 20.0);
  EXPECT_DOUBLE_EQ(r.mae, (22.0 * 1.0 + 20.0 + 5.0) / 24.0);
  EXPECT_NEAR(*r.mae_com, 0.6 * r.mae + 0.2 * 20.0 + 0.2 * 5.0, 1e-12);
  EXPECT_NEAR(*r.mape_com, 0.6 * r.mape + 0.2 * *r.mape_noon + 0.2 * *r.mape_night, 1e-12);
}

TEST(Stratified, EqualErrorsGiveEqualComposite) {
  std::vector<double> y(48, 50.0), f(48, 52.0);
  std::vector<Timestamp> t;
  for (int k = 0; k < 48; ++k) t.push_back(at_hour(k / 24, k % 24));
  const auto r = stratified(y, f, t);
  EXPECT_DOUBLE_EQ(*r.mae_noon, r.mae);
  EXPECT_DOUBLE_EQ(*r.mae_night, r.mae);
  EXPECT_DOUBLE_EQ(*r.mae_com, r.mae);
}

TEST(Stratified, MissingStratumLeavesCompositeUnavailable) {
  std::vector<double> y{10, 20}, f{11, 19};
  std::vector<Timestamp> t{at_hour(0, 11), at_hour(1, 11)};
  const auto r = stratified(y, f, t);
  EXPECT_TRUE(r.mae_noon.has_value());
  EXPECT_FALSE(r.mae_night.has_value());
  EXPECT_FALSE(r.composite_available());
  EXPECT_FALSE(r.mape_com.has_value());
}

TEST(Stratified, ConfigurableHours) {
  std::vector<double> y{10, 10}, f{12, 13};
  std::vector<Timestamp> t{at_hour(0, 9), at_hour(0, 18)};
  const auto r = stratified(y, f, t, MetricHours{9, 18});
  EXPECT_DOUBLE_EQ(*r.mae_noon, 2.0);
  EXPECT_DOUBLE_EQ(*r.mae_night, 3.0);
}

TEST(MetricProperties, ShiftAndPermutation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(50, 150);
  std::vector<double> y(100), f(100);
  for (int k = 0; k < 100; ++k) {
    y[k] = u(rng);
    f[k] = u(rng);
  }
  const double base = mae(y, f);
  for (double c : {-3.0, 0.5, 7.0}) {
    std::vector<double> g = f;
    for (auto& v : g) v += c;
    EXPECT_LE(std::abs(mae(y, g) - base), std::abs(c) + 1e-12);
    std::vector<double> exact = y;
    for (auto& v : exact) v += c;
    EXPECT_NEAR(mae(y, exact), std::abs(c), 1e-12);
  }
  std::vector<int> order(100);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> yp, fp;
  for (int k : order) {
    yp.push_back(y[k]);
    fp.push_back(f[k]);
  }
  EXPECT_NEAR(mae(yp, fp), base, 1e-12);
  EXPECT_NEAR(mape(yp, fp), mape(y, f), 1e-12);
}
