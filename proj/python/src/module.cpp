#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "geoload/benchmarks.hpp"
#include "geoload/config.hpp"
#include "geoload/data.hpp"
#include "geoload/error.hpp"
#include "geoload/explain.hpp"
#include "geoload/graph.hpp"
#include "geoload/metrics.hpp"
#include "geoload/persistence.hpp"
#include "geoload/pipeline.hpp"
#include "geoload/report.hpp"

namespace py = pybind11;
using namespace geoload;

namespace {

PyObject* g_error_type = nullptr;

std::vector<Timestamp> parse_times(const std::vector<std::string>& stamps) {
  std::vector<Timestamp> out;
  out.reserve(stamps.size());
  for (const auto& s : stamps) out.push_back(parse_timestamp(s));
  return out;
}

py::dict metrics_dict(const MetricReport& r) {
  py::dict d;
  const auto cols = metric_columns();
  const auto vals = metric_values(r);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    d[py::str(cols[k])] = vals[k] ? py::object(py::float_(*vals[k])) : py::object(py::none());
  }
  return d;
}

NodeMask mask_from(const std::vector<int>& bits) {
  NodeMask m;
  for (int b : bits) m.keep.push_back(b ? 1 : 0);
  return m;
}

Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mask_matrix(
    const std::vector<NodeMask>& masks, int n) {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      static_cast<Eigen::Index>(masks.size()), n);
  for (std::size_t p = 0; p < masks.size(); ++p) {
    for (int i = 0; i < n; ++i) out(static_cast<Eigen::Index>(p), i) = masks[p].keep[i];
  }
  return out;
}

py::dict explanation_dict(const Explanation& e) {
  py::dict d;
  d["phi0"] = e.phi0;
  d["phi"] = e.phi;
  d["method"] = e.method;
  d["mask_count"] = e.mask_count;
  d["condition_number"] = e.condition_number;
  d["condition_warning"] = e.condition_warning;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph-convolutional load forecasting and Shapley location importance";

  // Owned reference kept for the process lifetime.
  g_error_type = PyErr_NewException("geoload._core.GeoloadError", PyExc_RuntimeError, nullptr);
  m.attr("GeoloadError") = py::handle(g_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(g_error_type)(py::str(e.what()));
      exc.attr("kind") = py::str(std::string(to_string(e.kind())));
      exc.attr("exit_code") = exit_code(e.kind());
      PyErr_SetObject(g_error_type, exc.ptr());
    }
  });

  py::class_<Location>(m, "Location")
      .def(py::init<int, double, double>(), py::arg("id"), py::arg("lat"), py::arg("lon"))
      .def_readwrite("id", &Location::id)
      .def_readwrite("lat", &Location::lat)
      .def_readwrite("lon", &Location::lon)
      .def("__repr__", [](const Location& l) {
        return "Location(" + std::to_string(l.id) + ", " + std::to_string(l.lat) + ", " +
               std::to_string(l.lon) + ")";
      });

  m.def(
      "build_adjacency",
      [](const std::vector<Location>& locs, const std::string& rule, double threshold_deg, int k) {
        return build_adjacency(locs, NeighborConfig{neighbor_rule_from_string(rule), threshold_deg, k})
            .entries;
      },
      py::arg("locations"), py::arg("rule") = "grid", py::arg("threshold_deg") = 0.3, py::arg("k") = 4);
  m.def(
      "normalize", [](const Eigen::MatrixXd& a) { return normalize(AdjacencyMatrix{a}).entries; },
      py::arg("adjacency"));
  m.def("synthetic_grid", &synthetic_grid, py::arg("n_locations"));
  m.def("spatial_weights", &spatial_weights, py::arg("n_locations"), py::arg("dominant"));

  m.def("mae", [](const std::vector<double>& a, const std::vector<double>& f) { return mae(a, f); },
        py::arg("actuals"), py::arg("forecasts"));
  m.def("mape", [](const std::vector<double>& a, const std::vector<double>& f) { return mape(a, f); },
        py::arg("actuals"), py::arg("forecasts"));
  m.def("composite", &composite, py::arg("overall"), py::arg("noon"), py::arg("night"));
  m.def(
      "stratified_metrics",
      [](const std::vector<double>& a, const std::vector<double>& f,
         const std::vector<std::string>& stamps, int noon, int night) {
        const auto times = parse_times(stamps);
        return metrics_dict(stratified(a, f, times, MetricHours{noon, night}));
      },
      py::arg("actuals"), py::arg("forecasts"), py::arg("timestamps"), py::arg("noon_hour") = 11,
      py::arg("night_hour") = 20);

  m.def("kernel_weight", &kernel_weight, py::arg("n"), py::arg("coalition_size"));
  m.def("min_mask_count", &min_mask_count, py::arg("n"));
  m.def(
      "generate_masks",
      [](int n, int count, std::uint64_t seed, const std::string& sampling) {
        const auto batch = generate_masks(n, count, seed, mask_sampling_from_string(sampling));
        return py::make_tuple(mask_matrix(batch.node_masks, n), batch.weights);
      },
      py::arg("n"), py::arg("count"), py::arg("seed"), py::arg("sampling") = "size_stratified");
  m.def(
      "exact_shapley",
      [](int n, const std::function<double(std::vector<int>)>& value, int max_nodes) {
        return explanation_dict(exact_shapley(
            n,
            [&](const NodeMask& mask) {
              return value(std::vector<int>(mask.keep.begin(), mask.keep.end()));
            },
            max_nodes));
      },
      py::arg("n"), py::arg("value"), py::arg("max_nodes") = 20,
      "Exact Shapley values of a coalition value function taking a 0/1 list.");
  m.def(
      "solve_wls",
      [](const std::vector<std::vector<int>>& masks, const std::vector<double>& outputs,
         const std::vector<double>& weights, double v_full, double v_empty) {
        PerturbedDataset data;
        for (const auto& bits : masks) data.node_masks.push_back(mask_from(bits));
        data.outputs = outputs;
        return explanation_dict(solve_wls(data, weights, v_full, v_empty));
      },
      py::arg("masks"), py::arg("outputs"), py::arg("weights"), py::arg("v_full"), py::arg("v_empty"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("locations", &Dataset::locations)
      .def_property_readonly("load_mw", [](const Dataset& d) { return d.load.load_mw; })
      .def_property_readonly("temp_c", [](const Dataset& d) { return d.weather.temp_c; })
      .def_property_readonly("rh_pct", [](const Dataset& d) { return d.weather.rh_pct; })
      .def_property_readonly("start", [](const Dataset& d) { return format_timestamp(d.load.start); })
      .def_property_readonly("fingerprint", [](const Dataset& d) { return dataset_fingerprint(d); })
      .def("__len__", [](const Dataset& d) { return d.load.hours(); });

  m.def("load_dataset", &ingest_directory, py::arg("directory"),
        "Reads locations.csv, load.csv and weather.csv from a directory.");
  m.def(
      "synthesize",
      [](int n, int days, std::uint64_t seed, std::optional<std::vector<double>> weights,
         double noise_level) {
        SynthConfig s;
        s.locations = n;
        s.days = days;
        s.noise_level = noise_level;
        if (weights) s.weights = *weights;
        return synthesize(n, days, s.ground_truth(seed));
      },
      py::arg("n_locations"), py::arg("n_days"), py::arg("seed") = 42, py::arg("weights") = py::none(),
      py::arg("noise_level") = 0.02);
  m.def(
      "save_dataset",
      [](const Dataset& d, const std::filesystem::path& dir) {
        std::filesystem::create_directories(dir);
        write_locations_csv(dir / "locations.csv", d.locations);
        write_load_csv(dir / "load.csv", d.load);
        write_weather_csv(dir / "weather.csv", d.weather);
      },
      py::arg("dataset"), py::arg("directory"));

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("from_json", &parse_config, py::arg("text"))
      .def_readonly("seed", &RunConfig::seed)
      .def("set_seed", &RunConfig::set_seed, py::arg("seed"))
      .def("to_json", &RunConfig::canonical_json)
      .def("hash", &RunConfig::hash);

  py::class_<ModelFile>(m, "Model")
      .def_property_readonly("nodes", [](const ModelFile& f) { return f.model.nodes(); })
      .def_property_readonly("seed", [](const ModelFile& f) { return f.model.seed(); })
      .def_readonly("best_epoch", &ModelFile::best_epoch)
      .def_readonly("config_hash", &ModelFile::config_hash)
      .def_property_readonly("parameter_count",
                             [](const ModelFile& f) { return f.model.parameters().count(); })
      .def("to_json", &model_to_json)
      .def("save", [](const ModelFile& f, const std::filesystem::path& p) { save_model(p, f); },
           py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "train",
      [](const Dataset& data, const RunConfig& cfg, bool no_mf) {
        RunConfig c = cfg;
        if (no_mf) c.architecture.gcn_dims.clear();
        const auto split = plan_split(data, c.split);
        const auto sets = build_samples(data.load, data.weather, split);
        IntegratedRun run;
        {
          py::gil_scoped_release release;
          run = train_integrated(c.architecture, build_adjacency(data.locations, c.graph), sets, split,
                                 c.trainer, c.hours);
        }
        ModelFile file{run.model, c.graph, data.locations, split, c.trainer, run.best_epoch, c.hash(),
                       dataset_fingerprint(data)};
        py::dict history;
        std::vector<double> train_loss, val_loss, best;
        for (const auto& r : run.history) {
          train_loss.push_back(r.train_loss);
          val_loss.push_back(r.validation_loss);
          best.push_back(r.best_validation_loss);
        }
        history["train_loss"] = train_loss;
        history["validation_loss"] = val_loss;
        history["best_validation_loss"] = best;
        return py::make_tuple(file, history, metrics_dict(run.test));
      },
      py::arg("dataset"), py::arg("config") = RunConfig{}, py::arg("no_mf") = false,
      "Trains the integrated model; returns (model, history, test metrics).");

  m.def(
      "forecast",
      [](const ModelFile& file, const Dataset& data, const std::string& range) {
        check_compatibility(file, data);
        const auto& s = file.split;
        Timestamp b = s.test_begin, e = s.test_end;
        if (range == "validation") b = s.validation_begin, e = s.validation_end;
        if (range == "train") b = s.train_begin, e = s.train_end;
        const auto samples = build_range(data.load, data.weather, s.normalization, b, e);
        const auto series = forecast_series(file.model, samples, s.normalization.target);
        std::vector<std::string> stamps;
        for (auto t : series.times) stamps.push_back(format_timestamp(t));
        py::dict d;
        d["timestamp"] = stamps;
        d["forecast_mw"] = series.forecast;
        d["actual_mw"] = series.actual;
        return d;
      },
      py::arg("model"), py::arg("dataset"), py::arg("range") = "test");

  m.def(
      "explain",
      [](const ModelFile& file, const Dataset& data, int samples, std::uint64_t seed, bool exact,
         int stride, const std::string& sampling, int jobs) {
        check_compatibility(file, data);
        const auto& s = file.split;
        const auto all = build_range(data.load, data.weather, s.normalization, s.test_begin, s.test_end);
        std::vector<Sample> chosen;
        for (std::size_t k = 0; k < all.size(); k += static_cast<std::size_t>(std::max(stride, 1))) {
          chosen.push_back(all[k]);
        }
        ExplainOptions o;
        o.mask_count = samples;
        o.seed = seed;
        o.exact = exact;
        o.sampling = mask_sampling_from_string(sampling);
        o.jobs = jobs;
        LocationImportance imp;
        {
          py::gil_scoped_release release;
          imp = explain_locations(file.model, chosen, o, s.normalization.target, "MW");
        }
        py::dict d;
        d["phi0"] = imp.mean_phi0;
        d["phi"] = imp.importance;
        d["mean_signed_phi"] = imp.mean_phi;
        d["ranking"] = imp.ranking;
        d["units"] = imp.units;
        d["P"] = imp.mask_count;
        d["seed"] = imp.seed;
        d["sample_count"] = imp.sample_count;
        d["condition_warning"] = imp.condition_warning;
        return d;
      },
      py::arg("model"), py::arg("dataset"), py::arg("samples") = 2000, py::arg("seed") = 1,
      py::arg("exact") = false, py::arg("stride") = 1, py::arg("sampling") = "size_stratified",
      py::arg("jobs") = 1);
}
