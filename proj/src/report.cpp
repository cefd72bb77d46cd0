#include "geoload/report.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoload/csv.hpp"
#include "geoload/error.hpp"

namespace geoload {
namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(); }

std::string stamp_line(const ArtifactStamp& stamp) {
  return "# config_hash=" + stamp.config_hash + " seed=" + std::to_string(stamp.seed) + "\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

std::string kind_name(BenchmarkKind k) {
  switch (k) {
    case BenchmarkKind::single: return "single";
    case BenchmarkKind::none: return "none";
    case BenchmarkKind::all: return "all";
    case BenchmarkKind::average: return "average";
    case BenchmarkKind::virtual_station: return "hongtao";
  }
  return "?";
}

json metrics_object(const MetricReport& r) {
  json j = json::object();
  const auto cols = metric_columns();
  const auto vals = metric_values(r);
  for (std::size_t k = 0; k < cols.size(); ++k) j[cols[k]] = optional_json(vals[k]);
  return j;
}

json row_json(const NamedResult& r) {
  json j = metrics_object(r.test);
  j["name"] = r.name;
  j["kind"] = r.kind;
  j["locations"] = r.locations;
  j["validation_MAE"] = r.validation_mae;
  j["best_epoch"] = r.best_epoch;
  j["count"] = r.test.count;
  return j;
}

}  // namespace

std::vector<std::string> metric_columns() {
  return {"MAPE", "MAPE_Noon", "MAPE_Night", "MAPE_Com", "MAE", "MAE_Noon", "MAE_Night", "MAE_Com"};
}

std::vector<std::optional<double>> metric_values(const MetricReport& r) {
  return {r.mape, r.mape_noon, r.mape_night, r.mape_com, r.mae, r.mae_noon, r.mae_night, r.mae_com};
}

std::string explanation_json(const LocationImportance& imp, const ArtifactStamp& stamp, int top_n) {
  std::vector<int> ranking = imp.ranking;
  if (top_n > 0 && top_n < static_cast<int>(ranking.size())) ranking.resize(static_cast<std::size_t>(top_n));
  json j;
  j["config_hash"] = stamp.config_hash;
  j["seed"] = stamp.seed;
  j["phi0"] = imp.mean_phi0;
  j["phi"] = std::vector<double>(imp.importance.data(), imp.importance.data() + imp.importance.size());
  j["mean_signed_phi"] =
      std::vector<double>(imp.mean_phi.data(), imp.mean_phi.data() + imp.mean_phi.size());
  j["ranking"] = ranking;
  j["top_n"] = top_n;
  j["units"] = imp.units;
  j["P"] = imp.mask_count;
  j["sample_count"] = imp.sample_count;
  j["method"] = imp.method;
  j["sampling"] = imp.sampling;
  j["max_condition_number"] = imp.max_condition_number;
  j["condition_warning"] = imp.condition_warning;
  return j.dump(1) + "\n";
}

void write_explanation_csv(const std::filesystem::path& path, const LocationImportance& imp,
                           const ArtifactStamp& stamp) {
  auto out = open_out(path);
  out << stamp_line(stamp) << "location_id,importance,rank\n";
  std::vector<int> rank(imp.ranking.size());
  for (std::size_t r = 0; r < imp.ranking.size(); ++r) rank[imp.ranking[r]] = static_cast<int>(r) + 1;
  for (Eigen::Index i = 0; i < imp.importance.size(); ++i) {
    out << i << ',' << csv::format_double(imp.importance(i)) << ',' << rank[i] << '\n';
  }
}

NamedResult named_result(const BenchmarkRun& run) {
  return {run.spec.name(), kind_name(run.spec.kind), run.spec.locations, run.test, run.validation_mae,
          run.best_epoch};
}

std::string benchmark_report_json(const BenchmarkSuite& suite,
                                  const std::optional<NamedResult>& proposed,
                                  const ArtifactStamp& stamp, const std::string& data_fingerprint) {
  json j;
  j["config_hash"] = stamp.config_hash;
  j["seed"] = stamp.seed;
  j["data_fingerprint"] = data_fingerprint;
  j["columns"] = metric_columns();
  json rows = json::array();
  for (const auto& s : suite.singles) rows.push_back(row_json(named_result(s)));
  if (suite.none) rows.push_back(row_json(named_result(*suite.none)));
  if (suite.all) rows.push_back(row_json(named_result(*suite.all)));
  if (suite.average) rows.push_back(row_json(named_result(*suite.average)));
  if (suite.hongtao) {
    auto ht = row_json(named_result(suite.hongtao->selected));
    ht["name"] = "HT";
    ht["k_star"] = suite.hongtao->k_star;
    rows.push_back(ht);
  }
  if (proposed) rows.push_back(row_json(*proposed));
  j["rows"] = rows;
  if (suite.hongtao) {
    const auto& h = *suite.hongtao;
    j["hongtao"] = {{"ranking", h.ranking},
                    {"single_validation_MAE", h.single_validation_mae},
                    {"k", [&] {
                       std::vector<int> k(h.validation_mae.size());
                       for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<int>(i) + 1;
                       return k;
                     }()},
                    {"validation_MAE", h.validation_mae},
                    {"test_MAE", h.test_mae},
                    {"k_star", h.k_star},
                    {"k_test_best", h.k_test_best},
                    {"selected", h.selected.spec.name()}};
  }
  return j.dump(1) + "\n";
}

std::string metrics_json(const MetricReport& r, const ArtifactStamp& stamp) {
  json j = metrics_object(r);
  j["config_hash"] = stamp.config_hash;
  j["seed"] = stamp.seed;
  j["count"] = r.count;
  j["noon_count"] = r.noon_count;
  j["night_count"] = r.night_count;
  return j.dump(1) + "\n";
}

void write_metrics_csv(const std::filesystem::path& path, const MetricReport& r,
                       const ArtifactStamp& stamp) {
  auto out = open_out(path);
  out << stamp_line(stamp);
  const auto cols = metric_columns();
  const auto vals = metric_values(r);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (std::size_t k = 0; k < vals.size(); ++k) {
    out << (k ? "," : "") << (vals[k] ? csv::format_double(*vals[k]) : std::string());
  }
  out << '\n';
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history,
                       const ArtifactStamp& stamp) {
  auto out = open_out(path);
  out << stamp_line(stamp) << "epoch,train_loss,validation_loss,best_validation_loss\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << csv::format_double(r.train_loss) << ','
        << csv::format_double(r.validation_loss) << ',' << csv::format_double(r.best_validation_loss)
        << '\n';
  }
}

void write_forecasts_csv(const std::filesystem::path& path, const ForecastSeries& series,
                         const ArtifactStamp& stamp) {
  auto out = open_out(path);
  out << stamp_line(stamp) << "timestamp,forecast_mw,actual_mw\n";
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    out << format_timestamp(series.times[k]) << ',' << csv::format_double(series.forecast[k]) << ','
        << csv::format_double(series.actual[k]) << '\n';
  }
}

ForecastSeries read_forecasts_csv(const std::filesystem::path& path, ArtifactStamp* stamp) {
  if (stamp) {
    std::ifstream in(path);
    std::string first;
    if (in && std::getline(in, first) && first.rfind("# config_hash=", 0) == 0) {
      std::istringstream is(first.substr(2));
      std::string tok;
      while (is >> tok) {
        if (tok.rfind("config_hash=", 0) == 0) stamp->config_hash = tok.substr(12);
        if (tok.rfind("seed=", 0) == 0) stamp->seed = std::stoull(tok.substr(5));
      }
    }
  }
  const auto table = csv::read(path);
  csv::require_header(table, {"timestamp", "forecast_mw", "actual_mw"}, path);
  ForecastSeries s;
  for (const auto& row : table.rows) {
    try {
      s.times.push_back(parse_timestamp(row.fields[0]));
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(row.line) + ": " + e.what());
    }
    s.forecast.push_back(csv::to_double(row.fields[1], row, "forecast_mw", path));
    s.actual.push_back(csv::to_double(row.fields[2], row, "actual_mw", path));
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

}  // namespace geoload
