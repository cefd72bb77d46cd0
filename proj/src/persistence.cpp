#include "geoload/persistence.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoload/error.hpp"
#include "geoload/hash.hpp"

namespace geoload {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "geoload.integrated_model";

json stats_json(const FeatureStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

FeatureStats stats_from(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

Timestamp stamp_from(const json& j) { return parse_timestamp(j.get<std::string>()); }

std::string adjacency_hash(const AdjacencyMatrix& a) {
  std::string bits;
  for (Eigen::Index i = 0; i < a.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.entries.cols(); ++j) bits += a.entries(i, j) != 0.0 ? '1' : '0';
    bits += ';';
  }
  return hash_hex(bits);
}

}  // namespace

std::vector<std::string> node_feature_names() { return {"temp_c", "rh_pct"}; }

std::vector<std::string> exo_feature_names() {
  static const std::array<const char*, 7> days{"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
  std::vector<std::string> out;
  for (int m = 1; m <= 12; ++m) out.push_back("month_" + std::to_string(m));
  for (const char* d : days) out.push_back(std::string("weekday_") + d);
  for (int h = 0; h < 24; ++h) out.push_back("hour_" + std::to_string(h));
  for (int d = 1; d <= kLagDays; ++d) out.push_back("load_lag_d" + std::to_string(d));
  return out;
}

std::string feature_schema_hash() {
  std::string s = "zscore-train;";
  for (const auto& n : node_feature_names()) s += n + ',';
  s += ';';
  for (const auto& n : exo_feature_names()) s += n + ',';
  return hash_hex(s);
}

std::string dataset_fingerprint(const Dataset& data) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& l : data.locations) os << l.id << ',' << l.lat << ',' << l.lon << ';';
  os << format_timestamp(data.load.start) << ';';
  for (double v : data.load.load_mw) os << v << ',';
  for (Eigen::Index h = 0; h < data.weather.temp_c.rows(); ++h) {
    for (Eigen::Index i = 0; i < data.weather.temp_c.cols(); ++i) {
      os << data.weather.temp_c(h, i) << ',' << data.weather.rh_pct(h, i) << ';';
    }
  }
  return hash_hex(os.str());
}

std::string model_to_json(const ModelFile& file) {
  const auto& m = file.model;
  const auto& arch = m.architecture();
  json j;
  j["format"] = kFormat;
  j["version"] = kModelFormatVersion;
  j["seed"] = m.seed();
  j["config_hash"] = file.config_hash;
  j["data_fingerprint"] = file.data_fingerprint;
  j["architecture"] = {{"node_features", arch.node_features},
                       {"exo_dim", arch.exo_dim},
                       {"gcn_dims", arch.gcn_dims},
                       {"dense_dims", arch.dense_dims},
                       {"gcn_activation", nn::to_string(arch.gcn_activation)},
                       {"pooling", "mean"}};

  json layers = json::array();
  for (const auto& l : m.generator().layers) {
    layers.push_back({{"kind", "gcn"},
                      {"weight_shape", {l.weight.rows(), l.weight.cols()}},
                      {"activation", nn::to_string(l.activation)}});
  }
  for (const auto& l : m.forecaster().layers) {
    layers.push_back({{"kind", "dense"},
                      {"weight_shape", {l.weight.rows(), l.weight.cols()}},
                      {"bias_length", l.bias.size()},
                      {"activation", nn::to_string(l.activation)}});
  }
  j["layers"] = layers;

  // Column-major, in parameter-set order.
  std::vector<double> flat;
  for (const auto& a : m.parameters().arrays) flat.insert(flat.end(), a.data(), a.data() + a.size());
  j["param_count"] = flat.size();
  j["params"] = flat;

  json locs = json::array();
  for (const auto& l : file.locations) locs.push_back({{"id", l.id}, {"lat", l.lat}, {"lon", l.lon}});
  j["graph"] = {{"rule", to_string(file.graph.rule)},
                {"threshold_deg", file.graph.threshold_deg},
                {"k", file.graph.k},
                {"locations", locs},
                {"adjacency_hash", adjacency_hash(m.adjacency())}};

  j["feature_schema"] = {{"node_features", node_feature_names()},
                         {"exo", exo_feature_names()},
                         {"lag_days", kLagDays},
                         {"normalization", "zscore-train"},
                         {"hash", file.schema_hash}};

  const auto& n = file.split.normalization;
  json lags = json::array();
  for (const auto& s : n.lags) lags.push_back(stats_json(s));
  j["normalization"] = {{"temp", stats_json(n.temp)},
                        {"rh", stats_json(n.rh)},
                        {"lags", lags},
                        {"target", stats_json(n.target)}};
  j["split"] = {{"train_begin", format_timestamp(file.split.train_begin)},
                {"train_end", format_timestamp(file.split.train_end)},
                {"validation_begin", format_timestamp(file.split.validation_begin)},
                {"validation_end", format_timestamp(file.split.validation_end)},
                {"test_begin", format_timestamp(file.split.test_begin)},
                {"test_end", format_timestamp(file.split.test_end)}};
  j["trainer"] = {{"learning_rate", file.trainer.learning_rate},
                  {"max_epochs", file.trainer.max_epochs},
                  {"patience", file.trainer.patience},
                  {"batch_size", file.trainer.batch_size},
                  {"momentum", file.trainer.momentum},
                  {"seed", file.trainer.seed}};
  j["best_epoch"] = file.best_epoch;
  return j.dump(1);
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kFormat) {
    throw Error(ErrorKind::compatibility, "not a geoload model file");
  }
  if (j.value("version", -1) != kModelFormatVersion) {
    throw Error(ErrorKind::compatibility,
                "unsupported model format version " + j.value("version", json()).dump());
  }
  ModelFile file;
  try {
    file.schema_hash = j.at("feature_schema").at("hash").get<std::string>();
    if (file.schema_hash != feature_schema_hash()) {
      throw Error(ErrorKind::compatibility, "model feature schema " + file.schema_hash +
                                                " does not match this build (" +
                                                feature_schema_hash() + ")");
    }
    const auto& g = j.at("graph");
    file.graph.rule = neighbor_rule_from_string(g.at("rule").get<std::string>());
    file.graph.threshold_deg = g.at("threshold_deg").get<double>();
    file.graph.k = g.at("k").get<int>();
    for (const auto& l : g.at("locations")) {
      file.locations.push_back({l.at("id").get<int>(), l.at("lat").get<double>(), l.at("lon").get<double>()});
    }
    validate_locations(file.locations);
    const auto adjacency = build_adjacency(file.locations, file.graph);
    if (adjacency_hash(adjacency) != g.at("adjacency_hash").get<std::string>()) {
      throw Error(ErrorKind::compatibility, "stored adjacency does not match the graph rule");
    }

    const auto& a = j.at("architecture");
    ArchitectureConfig arch;
    arch.node_features = a.at("node_features").get<int>();
    arch.exo_dim = a.at("exo_dim").get<int>();
    arch.gcn_dims = a.at("gcn_dims").get<std::vector<int>>();
    arch.dense_dims = a.at("dense_dims").get<std::vector<int>>();
    arch.gcn_activation = nn::activation_from_string(a.at("gcn_activation").get<std::string>());
    if (arch.node_features != kNodeFeatures || arch.exo_dim != kExoDim) {
      throw Error(ErrorKind::compatibility, "model input dimensions do not match this build");
    }

    IntegratedModel model(arch, adjacency, j.at("seed").get<std::uint64_t>());
    auto params = model.parameters();
    const auto flat = j.at("params").get<std::vector<double>>();
    if (flat.size() != params.count()) {
      throw Error(ErrorKind::shape, "model file holds " + std::to_string(flat.size()) +
                                        " parameters, architecture needs " +
                                        std::to_string(params.count()));
    }
    std::size_t k = 0;
    for (auto& arr : params.arrays) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k),
                flat.begin() + static_cast<std::ptrdiff_t>(k + arr.size()), arr.data());
      k += static_cast<std::size_t>(arr.size());
    }
    if (!params.all_finite()) throw Error(ErrorKind::numeric, "model file has non-finite parameters");
    model.set_parameters(params);
    file.model = std::move(model);

    const auto& n = j.at("normalization");
    file.split.normalization.temp = stats_from(n.at("temp"));
    file.split.normalization.rh = stats_from(n.at("rh"));
    file.split.normalization.target = stats_from(n.at("target"));
    const auto& lags = n.at("lags");
    if (lags.size() != kLagDays) throw Error(ErrorKind::compatibility, "lag statistics length mismatch");
    for (int d = 0; d < kLagDays; ++d) file.split.normalization.lags[d] = stats_from(lags.at(d));

    const auto& s = j.at("split");
    file.split.train_begin = stamp_from(s.at("train_begin"));
    file.split.train_end = stamp_from(s.at("train_end"));
    file.split.validation_begin = stamp_from(s.at("validation_begin"));
    file.split.validation_end = stamp_from(s.at("validation_end"));
    file.split.test_begin = stamp_from(s.at("test_begin"));
    file.split.test_end = stamp_from(s.at("test_end"));

    const auto& t = j.at("trainer");
    file.trainer.learning_rate = t.at("learning_rate").get<double>();
    file.trainer.max_epochs = t.at("max_epochs").get<int>();
    file.trainer.patience = t.at("patience").get<int>();
    file.trainer.batch_size = t.at("batch_size").get<int>();
    file.trainer.momentum = t.at("momentum").get<double>();
    file.trainer.seed = t.at("seed").get<std::uint64_t>();
    file.best_epoch = j.at("best_epoch").get<int>();
    file.config_hash = j.at("config_hash").get<std::string>();
    file.data_fingerprint = j.at("data_fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed model file: ") + e.what());
  }
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << model_to_json(file) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void check_compatibility(const ModelFile& file, const Dataset& data) {
  if (file.schema_hash != feature_schema_hash()) {
    throw Error(ErrorKind::compatibility, "feature schema hash mismatch: model " + file.schema_hash +
                                              ", build " + feature_schema_hash());
  }
  if (data.locations.size() != file.locations.size()) {
    throw Error(ErrorKind::compatibility,
                "model was trained on " + std::to_string(file.locations.size()) +
                    " locations, data has " + std::to_string(data.locations.size()));
  }
  for (std::size_t i = 0; i < data.locations.size(); ++i) {
    const auto& a = data.locations[i];
    const auto& b = file.locations[i];
    if (a.id != b.id || std::abs(a.lat - b.lat) > 1e-9 || std::abs(a.lon - b.lon) > 1e-9) {
      throw Error(ErrorKind::compatibility,
                  "location " + std::to_string(a.id) + " does not match the model's graph");
    }
  }
}

}  // namespace geoload
