#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoload/config.hpp"
#include "geoload/error.hpp"
#include "geoload/persistence.hpp"
#include "geoload/pipeline.hpp"
#include "geoload/report.hpp"
#include "support.hpp"

using namespace geoload;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::io;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("geoload_persist_" + std::to_string(::getpid()) + "_" + name);
}

ModelFile sample_model_file() {
  ModelFile f;
  f.locations = synthetic_grid(4);
  f.graph = NeighborConfig{};
  const auto adj = build_adjacency(f.locations, f.graph);
  f.model = IntegratedModel(test_support::small_architecture(kExoDim), adj, 99);
  f.trainer.seed = 99;
  f.best_epoch = 12;
  f.config_hash = "abc123";
  f.data_fingerprint = "feed";
  f.split.normalization.target = {1000.0, 80.0};
  f.split.normalization.temp = {21.5, 6.0};
  return f;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ModelFile, JsonRoundTripIsExact) {
  const auto f = sample_model_file();
  const auto text = model_to_json(f);
  const auto back = model_from_json(text);
  EXPECT_EQ(model_to_json(back), text);
  std::mt19937_64 rng(3);
  const auto s = test_support::random_sample(4, 2, kExoDim, rng);
  EXPECT_EQ(back.model.predict(s), f.model.predict(s));
  EXPECT_EQ(back.best_epoch, 12);
  EXPECT_EQ(back.config_hash, "abc123");
  EXPECT_EQ(back.split.normalization.target.std, 80.0);
  EXPECT_EQ(back.model.seed(), 99u);
}

TEST(ModelFile, SaveLoadThroughDisk) {
  const auto f = sample_model_file();
  const auto path = temp_path("model.json");
  save_model(path, f);
  const auto back = load_model(path);
  EXPECT_EQ(model_to_json(back), model_to_json(f));
  fs::remove(path);
  EXPECT_EQ(kind_of([&] { load_model(path); }), ErrorKind::io);
}

TEST(ModelFile, DocumentsShapesSchemaAndGraph) {
  const auto j = json::parse(model_to_json(sample_model_file()));
  EXPECT_EQ(j.at("version"), kModelFormatVersion);
  EXPECT_EQ(j.at("seed"), 99);
  EXPECT_EQ(j.at("config_hash"), "abc123");
  EXPECT_TRUE(j.contains("layers"));
  EXPECT_TRUE(j.contains("params"));
  EXPECT_EQ(j.at("graph").at("rule"), "grid");
  EXPECT_EQ(j.at("graph").at("locations").size(), 4u);
  EXPECT_EQ(j.at("feature_schema").at("hash"), feature_schema_hash());
  EXPECT_EQ(j.at("feature_schema").at("exo").size(), 50u);
  EXPECT_EQ(j.at("param_count"), sample_model_file().model.parameters().count());
}

TEST(ModelFile, VersionAndSchemaMismatch) {
  auto j = json::parse(model_to_json(sample_model_file()));
  auto wrong_version = j;
  wrong_version["version"] = kModelFormatVersion + 1;
  EXPECT_EQ(kind_of([&] { model_from_json(wrong_version.dump()); }), ErrorKind::compatibility);
  auto wrong_schema = j;
  wrong_schema["feature_schema"]["hash"] = "0000";
  EXPECT_EQ(kind_of([&] { model_from_json(wrong_schema.dump()); }), ErrorKind::compatibility);
  auto wrong_format = j;
  wrong_format["format"] = "something.else";
  EXPECT_EQ(kind_of([&] { model_from_json(wrong_format.dump()); }), ErrorKind::compatibility);
}

TEST(ModelFile, MalformedAndMisshapen) {
  EXPECT_EQ(kind_of([] { model_from_json("{not json"); }), ErrorKind::parse);
  auto j = json::parse(model_to_json(sample_model_file()));
  j["params"].erase(j["params"].size() - 1);
  EXPECT_EQ(kind_of([&] { model_from_json(j.dump()); }), ErrorKind::shape);
}

TEST(ModelFile, CompatibilityWithDataset) {
  auto f = sample_model_file();
  SyntheticGroundTruth truth;
  truth.weights = spatial_weights(4, 0);
  auto data = synthesize(4, 60, truth);
  EXPECT_NO_THROW(check_compatibility(f, data));
  data.locations[2].lat += 0.01;
  EXPECT_EQ(kind_of([&] { check_compatibility(f, data); }), ErrorKind::compatibility);
  truth.weights = spatial_weights(5, 0);
  const auto bigger = synthesize(5, 60, truth);
  EXPECT_EQ(kind_of([&] { check_compatibility(f, bigger); }), ErrorKind::compatibility);
}

TEST(ModelFile, DatasetFingerprintTracksValues) {
  SyntheticGroundTruth truth;
  truth.weights = spatial_weights(3, 0);
  auto data = synthesize(3, 60, truth);
  const auto base = dataset_fingerprint(data);
  EXPECT_EQ(base, dataset_fingerprint(synthesize(3, 60, truth)));
  data.load.load_mw[100] += 1e-6;
  EXPECT_NE(base, dataset_fingerprint(data));
}

TEST(Config, DefaultsAndParsing) {
  const auto cfg = parse_config("{}");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.architecture.gcn_dims, (std::vector<int>{16, 16}));
  EXPECT_EQ(cfg.architecture.dense_dims, (std::vector<int>{64, 32}));
  EXPECT_EQ(cfg.trainer.batch_size, 32);
  EXPECT_EQ(cfg.explain.samples, 2000);

  const auto custom = parse_config(R"({"seed": 5, "trainer": {"learning_rate": 0.02, "patience": 4},
      "graph": {"rule": "knn", "k": 3}, "explain": {"sampling": "uniform", "top_n": 3},
      "metrics": {"noon_hour": 12}})");
  EXPECT_EQ(custom.seed, 5u);
  EXPECT_EQ(custom.trainer.seed, 5u);
  EXPECT_DOUBLE_EQ(custom.trainer.learning_rate, 0.02);
  EXPECT_EQ(custom.trainer.patience, 4);
  EXPECT_EQ(custom.graph.rule, NeighborRule::knn);
  EXPECT_EQ(custom.graph.k, 3);
  EXPECT_EQ(custom.explain.sampling, MaskSampling::uniform);
  EXPECT_EQ(custom.hours.noon, 12);
}

TEST(Config, RejectsBadInput) {
  for (const char* text : {"{\"unknown\": 1}", "{\"trainer\": {\"lr\": 1}}",
                           "{\"trainer\": {\"patience\": 0}}", "{\"trainer\": {\"learning_rate\": -1}}",
                           "{\"seed\": \"x\"}", "{\"graph\": {\"rule\": \"ring\"}}",
                           "{\"split\": {\"test_fraction\": 1.5}}", "[1, 2]"}) {
    EXPECT_EQ(kind_of([&] { parse_config(text); }), ErrorKind::config) << text;
  }
  EXPECT_EQ(kind_of([] { parse_config("{oops"); }), ErrorKind::config);
}

TEST(Config, HashIgnoresPathsAndKeyOrder) {
  const auto a = parse_config(R"({"seed": 3, "data_dir": "/tmp/a", "trainer": {"patience": 5, "batch_size": 16}})");
  const auto b = parse_config(R"({"trainer": {"batch_size": 16, "patience": 5}, "data_dir": "/elsewhere", "seed": 3})");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.canonical_json(), b.canonical_json());
  auto c = a;
  c.set_seed(4);
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(parse_config(a.canonical_json()).hash(), a.hash());
}

namespace {

LocationImportance toy_importance() {
  LocationImportance imp;
  imp.importance = Eigen::Vector3d(5.0, 20.0, 1.0);
  imp.mean_phi = Eigen::Vector3d(-5.0, 18.0, 0.5);
  imp.ranking = rank_descending(imp.importance);
  imp.mean_phi0 = 1200.0;
  imp.sample_count = 24;
  imp.mask_count = 2000;
  imp.seed = 9;
  imp.method = "kernel";
  imp.sampling = "size_stratified";
  imp.units = "MW";
  return imp;
}

}  // namespace

TEST(Report, ExplanationJsonKeys) {
  const auto j = json::parse(explanation_json(toy_importance(), {"hash1", 9}));
  for (const char* key : {"phi0", "phi", "ranking", "units", "P", "seed", "sample_count",
                          "condition_warning"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("ranking"), json::array({1, 0, 2}));
  EXPECT_EQ(j.at("P"), 2000);
  EXPECT_EQ(j.at("units"), "MW");
  EXPECT_EQ(j.at("condition_warning"), false);
  EXPECT_EQ(j.at("phi").size(), 3u);
  const auto top = json::parse(explanation_json(toy_importance(), {"hash1", 9}, 2));
  EXPECT_EQ(top.at("ranking"), json::array({1, 0}));
  EXPECT_EQ(top.at("phi").size(), 3u);
}

TEST(Report, ExplanationCsv) {
  const auto path = temp_path("explain.csv");
  write_explanation_csv(path, toy_importance(), {"hash1", 9});
  const auto text = read_file(path);
  fs::remove(path);
  EXPECT_NE(text.find("location_id,importance,rank\n"), std::string::npos);
  EXPECT_NE(text.find("\n1,20,1\n"), std::string::npos) << text;
  EXPECT_NE(text.find("\n2,1,3\n"), std::string::npos) << text;
}

TEST(Report, MetricColumnsAndValues) {
  EXPECT_EQ(metric_columns(), (std::vector<std::string>{"MAPE", "MAPE_Noon", "MAPE_Night",
                                                        "MAPE_Com", "MAE", "MAE_Noon",
                                                        "MAE_Night", "MAE_Com"}));
  MetricReport r;
  r.mape = 2.0;
  r.mae = 30.0;
  const auto v = metric_values(r);
  ASSERT_EQ(v.size(), 8u);
  EXPECT_EQ(v[0], 2.0);
  EXPECT_FALSE(v[3].has_value());
  const auto j = json::parse(metrics_json(r, {"h", 1}));
  EXPECT_TRUE(j.at("MAPE_Com").is_null());
  EXPECT_EQ(j.at("MAPE"), 2.0);
}

TEST(Report, ForecastCsvRoundTrip) {
  ForecastSeries s;
  const auto t0 = parse_timestamp("2021-05-01T00:00:00Z");
  for (int h = 0; h < 30; ++h) {
    s.times.push_back(t0 + std::chrono::hours{h});
    s.forecast.push_back(1000.0 + h * 0.123456789);
    s.actual.push_back(990.0 + h);
  }
  const auto path = temp_path("fc.csv");
  write_forecasts_csv(path, s, {"cafe", 17});
  ArtifactStamp stamp;
  const auto back = read_forecasts_csv(path, &stamp);
  fs::remove(path);
  EXPECT_EQ(back.times, s.times);
  EXPECT_EQ(back.forecast, s.forecast);
  EXPECT_EQ(back.actual, s.actual);
  EXPECT_EQ(stamp.config_hash, "cafe");
  EXPECT_EQ(stamp.seed, 17u);
}

TEST(Report, BenchmarkReportRows) {
  SyntheticGroundTruth truth;
  truth.weights = spatial_weights(2, 0);
  const auto data = synthesize(2, 60, truth);
  const auto split = plan_split(data);
  const auto sets = build_samples(data.load, data.weather, split);
  SuiteOptions opts;
  opts.trainer.max_epochs = 2;
  opts.hidden = {4};
  const auto suite = run_suite(sets, split, 2, opts);
  const auto j = json::parse(benchmark_report_json(suite, std::nullopt, {"h", 1}, "fp"));
  std::vector<std::string> names;
  for (const auto& row : j.at("rows")) {
    names.push_back(row.at("name"));
    for (const auto& col : metric_columns()) EXPECT_TRUE(row.contains(col)) << col;
  }
  EXPECT_EQ(names.size(), 2u + 3u + 1u);
  EXPECT_EQ(names.front(), "L0");
  const auto& ht = j.at("hongtao");
  EXPECT_EQ(ht.at("validation_MAE").size(), 2u);
  EXPECT_EQ(ht.at("test_MAE").size(), 2u);
  EXPECT_TRUE(ht.contains("k_star"));
  EXPECT_TRUE(ht.contains("k_test_best"));
}
