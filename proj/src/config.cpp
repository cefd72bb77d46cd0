#include "geoload/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoload/error.hpp"
#include "geoload/hash.hpp"

namespace geoload {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw Error(ErrorKind::config, "config " + where + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) bad(where, "unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "wrong type");
  }
}

std::string iso(Timestamp t) { return format_timestamp(t); }

std::optional<Timestamp> read_stamp(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) bad(where + "." + key, "expected an ISO-8601 timestamp");
  try {
    return parse_timestamp(obj.at(key).get<std::string>());
  } catch (const Error& e) {
    bad(where + "." + key, e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["synth"] = {{"locations", c.synth.locations},
                {"days", c.synth.days},
                {"dominant", c.synth.dominant},
                {"weights", c.synth.weights},
                {"noise_level", c.synth.noise_level},
                {"heat_island_c", c.synth.heat_island_c},
                {"local_anomaly_c", c.synth.local_anomaly_c},
                {"correlation_length_deg", c.synth.correlation_length_deg}};
  j["graph"] = {{"rule", to_string(c.graph.rule)},
                {"threshold_deg", c.graph.threshold_deg},
                {"k", c.graph.k}};
  j["architecture"] = {{"gcn_dims", c.architecture.gcn_dims},
                       {"dense_dims", c.architecture.dense_dims},
                       {"gcn_activation", nn::to_string(c.architecture.gcn_activation)}};
  j["trainer"] = {{"learning_rate", c.trainer.learning_rate},
                  {"max_epochs", c.trainer.max_epochs},
                  {"patience", c.trainer.patience},
                  {"batch_size", c.trainer.batch_size},
                  {"momentum", c.trainer.momentum}};
  j["split"] = {{"test_fraction", c.split.test_fraction},
                {"validation_fraction", c.split.validation_fraction},
                {"test_begin", c.split.test_begin ? json(iso(*c.split.test_begin)) : json()},
                {"validation_begin",
                 c.split.validation_begin ? json(iso(*c.split.validation_begin)) : json()}};
  j["explain"] = {{"samples", c.explain.samples},
                  {"sampling", to_string(c.explain.sampling)},
                  {"exact", c.explain.exact},
                  {"max_exact_nodes", c.explain.max_exact_nodes},
                  {"stride", c.explain.stride},
                  {"top_n", c.explain.top_n}};
  j["metrics"] = {{"noon_hour", c.hours.noon}, {"night_hour", c.hours.night}};
  j["benchmark"] = {{"hidden", c.benchmark.hidden}, {"suite", c.benchmark.suite}};
  return j;
}

}  // namespace

SyntheticGroundTruth SynthConfig::ground_truth(std::uint64_t seed) const {
  SyntheticGroundTruth truth;
  truth.weights = weights.empty() ? spatial_weights(locations, dominant < 0 ? locations / 2 : dominant)
                                  : weights;
  truth.noise_level = noise_level;
  truth.seed = seed;
  truth.heat_island_c = heat_island_c;
  truth.local_anomaly_c = local_anomaly_c;
  truth.correlation_length_deg = correlation_length_deg;
  return truth;
}

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  trainer.seed = value;
}

void RunConfig::validate() const {
  if (synth.locations < 2) bad("synth.locations", "need at least 2 locations");
  if (synth.days < 60) bad("synth.days", "need at least 60 days");
  if (synth.dominant >= synth.locations) bad("synth.dominant", "outside the location range");
  if (!synth.weights.empty() && static_cast<int>(synth.weights.size()) != synth.locations) {
    bad("synth.weights", "need one weight per location");
  }
  if (!(synth.noise_level >= 0.0)) bad("synth.noise_level", "must be >= 0");
  if (!(graph.threshold_deg > 0.0)) bad("graph.threshold_deg", "must be > 0");
  if (graph.k < 1) bad("graph.k", "must be >= 1");
  for (int d : architecture.gcn_dims) {
    if (d < 1) bad("architecture.gcn_dims", "widths must be >= 1");
  }
  for (int d : architecture.dense_dims) {
    if (d < 1) bad("architecture.dense_dims", "widths must be >= 1");
  }
  for (int d : benchmark.hidden) {
    if (d < 1) bad("benchmark.hidden", "widths must be >= 1");
  }
  trainer.validate();
  if (!(split.test_fraction > 0.0 && split.test_fraction < 1.0)) {
    bad("split.test_fraction", "must be in (0, 1)");
  }
  if (!(split.validation_fraction > 0.0 && split.validation_fraction < 1.0)) {
    bad("split.validation_fraction", "must be in (0, 1)");
  }
  if (explain.samples < 1) bad("explain.samples", "must be >= 1");
  if (explain.stride < 1) bad("explain.stride", "must be >= 1");
  if (explain.top_n < 0) bad("explain.top_n", "must be >= 0");
  if (explain.max_exact_nodes < 1) bad("explain.max_exact_nodes", "must be >= 1");
  if (hours.noon < 0 || hours.noon > 23 || hours.night < 0 || hours.night > 23) {
    bad("metrics", "hours must be in [0, 23]");
  }
  if (benchmark.suite != "full" && benchmark.suite != "basic") {
    bad("benchmark.suite", "expected 'full' or 'basic'");
  }
}

std::string RunConfig::canonical_json() const { return to_json(*this).dump(); }

std::string RunConfig::hash() const { return hash_hex(canonical_json()); }

ExplainOptions RunConfig::explain_options(int jobs) const {
  ExplainOptions o;
  o.mask_count = explain.samples;
  o.seed = seed;
  o.sampling = explain.sampling;
  o.exact = explain.exact;
  o.max_exact_nodes = explain.max_exact_nodes;
  o.jobs = jobs;
  return o;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  reject_unknown(j, "root",
                 {"data_dir", "seed", "synth", "graph", "architecture", "trainer", "split", "explain",
                  "metrics", "benchmark"});
  if (j.contains("data_dir")) {
    std::string dir;
    read(j, "data_dir", dir, "root");
    c.data_dir = dir;
  }
  std::uint64_t seed = c.seed;
  read(j, "seed", seed, "root");
  c.set_seed(seed);

  if (j.contains("synth")) {
    const auto& s = j["synth"];
    reject_unknown(s, "synth",
                   {"locations", "days", "dominant", "weights", "noise_level", "heat_island_c",
                    "local_anomaly_c", "correlation_length_deg"});
    read(s, "locations", c.synth.locations, "synth");
    read(s, "days", c.synth.days, "synth");
    read(s, "dominant", c.synth.dominant, "synth");
    read(s, "weights", c.synth.weights, "synth");
    read(s, "noise_level", c.synth.noise_level, "synth");
    read(s, "heat_island_c", c.synth.heat_island_c, "synth");
    read(s, "local_anomaly_c", c.synth.local_anomaly_c, "synth");
    read(s, "correlation_length_deg", c.synth.correlation_length_deg, "synth");
  }
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    reject_unknown(g, "graph", {"rule", "threshold_deg", "k"});
    std::string rule = to_string(c.graph.rule);
    read(g, "rule", rule, "graph");
    c.graph.rule = neighbor_rule_from_string(rule);
    read(g, "threshold_deg", c.graph.threshold_deg, "graph");
    read(g, "k", c.graph.k, "graph");
  }
  if (j.contains("architecture")) {
    const auto& a = j["architecture"];
    reject_unknown(a, "architecture", {"gcn_dims", "dense_dims", "gcn_activation"});
    read(a, "gcn_dims", c.architecture.gcn_dims, "architecture");
    read(a, "dense_dims", c.architecture.dense_dims, "architecture");
    std::string act = nn::to_string(c.architecture.gcn_activation);
    read(a, "gcn_activation", act, "architecture");
    c.architecture.gcn_activation = nn::activation_from_string(act);
  }
  if (j.contains("trainer")) {
    const auto& t = j["trainer"];
    reject_unknown(t, "trainer", {"learning_rate", "max_epochs", "patience", "batch_size", "momentum"});
    read(t, "learning_rate", c.trainer.learning_rate, "trainer");
    read(t, "max_epochs", c.trainer.max_epochs, "trainer");
    read(t, "patience", c.trainer.patience, "trainer");
    read(t, "batch_size", c.trainer.batch_size, "trainer");
    read(t, "momentum", c.trainer.momentum, "trainer");
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    reject_unknown(s, "split", {"test_fraction", "validation_fraction", "test_begin", "validation_begin"});
    read(s, "test_fraction", c.split.test_fraction, "split");
    read(s, "validation_fraction", c.split.validation_fraction, "split");
    c.split.test_begin = read_stamp(s, "test_begin", "split");
    c.split.validation_begin = read_stamp(s, "validation_begin", "split");
  }
  if (j.contains("explain")) {
    const auto& e = j["explain"];
    reject_unknown(e, "explain", {"samples", "sampling", "exact", "max_exact_nodes", "stride", "top_n"});
    read(e, "samples", c.explain.samples, "explain");
    std::string sampling = to_string(c.explain.sampling);
    read(e, "sampling", sampling, "explain");
    c.explain.sampling = mask_sampling_from_string(sampling);
    read(e, "exact", c.explain.exact, "explain");
    read(e, "max_exact_nodes", c.explain.max_exact_nodes, "explain");
    read(e, "stride", c.explain.stride, "explain");
    read(e, "top_n", c.explain.top_n, "explain");
  }
  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    reject_unknown(m, "metrics", {"noon_hour", "night_hour"});
    read(m, "noon_hour", c.hours.noon, "metrics");
    read(m, "night_hour", c.hours.night, "metrics");
  }
  if (j.contains("benchmark")) {
    const auto& b = j["benchmark"];
    reject_unknown(b, "benchmark", {"hidden", "suite"});
    read(b, "hidden", c.benchmark.hidden, "benchmark");
    read(b, "suite", c.benchmark.suite, "benchmark");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace geoload
