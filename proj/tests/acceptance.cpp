// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoload/benchmarks.hpp"
#include "geoload/config.hpp"
#include "geoload/explain.hpp"
#include "geoload/gcn.hpp"
#include "geoload/gradcheck.hpp"
#include "geoload/metrics.hpp"
#include "geoload/pipeline.hpp"
#include "geoload/report.hpp"
#include "support.hpp"

using namespace geoload;
using namespace geoload::test_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double masked_value(const IntegratedModel& m, const Sample& s, const NodeMask& mask) {
  return masked_prediction(m, s, mask);
}

// 1. Complete enumeration through the constrained WLS reproduces exact Shapley values.
Outcome exact_vs_kernel() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::mt19937_64 rng(101);
  for (int n : {4, 6, 8}) {
    for (int k = 0; k < 5; ++k) {
      ArchitectureConfig arch;  // two graph layers, two dense layers
      arch.exo_dim = 6;
      const IntegratedModel model(arch, random_adjacency(n, rng, 0.5), 1000 + 10 * n + k);
      const auto sample = random_sample(n, 2, 6, rng);
      const auto exact = exact_shapley(model, sample);
      const auto masks = enumerate_masks(n);
      const auto perturbed = build_perturbed(model, sample, masks);
      const auto kernel = solve_wls(perturbed, masks.weights, model.predict(sample),
                                    masked_value(model, sample, NodeMask::all(n, false)));
      worst = std::max(worst, (kernel.phi - exact.phi).cwiseAbs().maxCoeff());
    }
  }
  const double t = elapsed_s(t0);
  return {worst <= 1e-6 && t < 60.0,
          "max |dphi| = " + fmt("%.3g", worst) + ", " + fmt("%.1f", t) + " s"};
}

// 2. Monte Carlo error decreases with the mask budget and is small at P = 3200.
Outcome monte_carlo_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 10;
  std::mt19937_64 rng(202);
  const IntegratedModel model(small_architecture(), random_adjacency(n, rng, 0.35), 7);
  const auto sample = random_sample(n, 2, 3, rng);
  const auto exact = exact_shapley(model, sample);
  const double spread = exact.phi.maxCoeff() - exact.phi.minCoeff();
  const double v_full = model.predict(sample);
  const double v_empty = masked_value(model, sample, NodeMask::all(n, false));

  std::vector<double> errors;
  for (int count : {200, 800, 3200}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto masks = generate_masks(n, count, seed);
      const auto e = solve_wls(build_perturbed(model, sample, masks), masks.weights, v_full, v_empty);
      total += (e.phi - exact.phi).cwiseAbs().mean();
    }
    errors.push_back(total / 10.0);
  }
  const double t = elapsed_s(t0);
  const bool monotone = errors[1] <= errors[0] && errors[2] <= errors[1];
  const double ratio = errors[2] / spread;
  return {monotone && ratio <= 0.05 && t < 300.0,
          "mean error " + fmt("%.4g", errors[0]) + " / " + fmt("%.4g", errors[1]) + " / " +
              fmt("%.4g", errors[2]) + ", P=3200 error/spread = " + fmt("%.4f", ratio)};
}

// 3. Efficiency, dummy and symmetry axioms.
Outcome shapley_axioms() {
  std::mt19937_64 rng(303);
  double efficiency = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int n = 12;  // too large to enumerate within the budget, so masks are sampled
    const IntegratedModel model(small_architecture(), random_adjacency(n, rng, 0.3), 30 + k);
    const auto sample = random_sample(n, 2, 3, rng);
    ExplainOptions opts;
    opts.mask_count = 300;
    opts.seed = k;
    const auto e = explain_sample(model, sample, opts);
    efficiency = std::max(efficiency, std::abs(e.phi0 + e.phi.sum() - model.predict(sample)));
  }

  // Dummy: isolated node with zero features, confirmed by probing 64 masks.
  double dummy = 0.0;
  bool probe_ok = true;
  for (int k = 0; k < 5; ++k) {
    const int n = 7;
    auto a = random_adjacency(n, rng, 0.6);
    a.entries.row(3).setZero();
    a.entries.col(3).setZero();
    const IntegratedModel model(small_architecture(), a, 60 + k);
    auto sample = random_sample(n, 2, 3, rng);
    sample.node_features.row(3).setZero();
    for (int p = 0; p < 64; ++p) {
      NodeMask m = NodeMask::from_bits(n, rng() & 127u);
      NodeMask f = m;
      f.keep[3] ^= 1;
      probe_ok &= masked_value(model, sample, m) == masked_value(model, sample, f);
    }
    ExplainOptions opts;  // default budget covers all 126 coalitions
    dummy = std::max(dummy, std::abs(explain_sample(model, sample, opts).phi(3)));
  }

  // Symmetry: leaves 1 and 2 of a star share features.
  double symmetry = 0.0;
  for (int k = 0; k < 5; ++k) {
    AdjacencyMatrix a{Eigen::MatrixXd::Zero(5, 5)};
    for (int leaf = 1; leaf < 5; ++leaf) a.entries(0, leaf) = a.entries(leaf, 0) = 1.0;
    const IntegratedModel model(small_architecture(), a, 90 + k);
    auto sample = random_sample(5, 2, 3, rng);
    sample.node_features.row(2) = sample.node_features.row(1);
    const auto masks = enumerate_masks(5);
    const auto e = solve_wls(build_perturbed(model, sample, masks), masks.weights,
                             model.predict(sample), masked_value(model, sample, NodeMask::all(5, false)));
    symmetry = std::max(symmetry, std::abs(e.phi(1) - e.phi(2)));
  }
  return {efficiency <= 1e-9 && probe_ok && dummy <= 1e-6 && symmetry <= 1e-6,
          "efficiency " + fmt("%.3g", efficiency) + ", dummy " + fmt("%.3g", dummy) +
              ", symmetry " + fmt("%.3g", symmetry)};
}

// 4. Analytic gradients of the full model agree with central differences.
Outcome gradient_fidelity() {
  double worst = 0.0;
  bool all_passed = true;
  std::mt19937_64 rng(404);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ArchitectureConfig arch;  // 2 graph layers (16, 16), 2 dense layers (64, 32)
    arch.exo_dim = kExoDim;
    const int n = 6;
    const IntegratedModel model(arch, random_adjacency(n, rng, 0.5), seed);
    std::vector<Sample> batch;
    int attempts = 0;
    while (batch.size() < 3 && attempts < 1000) {
      ++attempts;
      auto s = random_sample(n, 2, kExoDim, rng);
      if (model.min_relu_margin(std::span<const Sample>(&s, 1)) > 1e-3) batch.push_back(std::move(s));
    }
    if (batch.size() < 3) return {false, "could not draw inputs away from relu kinks"};
    nn::GradientCheckOptions opts;
    opts.epsilon = 1e-5;
    opts.tolerance = 1e-4;
    const auto report = nn::check_gradients(model, std::span<const Sample>(batch), opts);
    worst = std::max(worst, report.max_relative_error);
    all_passed &= report.passed();
  }
  return {all_passed && worst <= 1e-4, "max relative error " + fmt("%.3g", worst) + " over 5 seeds"};
}

// 5. Hand-computed graph convolution and permutation invariance of the pooled output.
Outcome gcn_correctness() {
  RepresentationGenerator gen;
  gen.layers.push_back({Eigen::MatrixXd::Identity(1, 1), nn::Activation::identity});
  gen.propagation = normalize(path_adjacency(3));
  GcnTape tape;
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 0;
  const auto pooled = gcn_forward(gen, x, gen.propagation, &tape);
  const double r6 = 1.0 / std::sqrt(6.0);
  const auto& h = tape.preactivations[0];
  double hand = std::max({std::abs(h(0, 0) - r6), std::abs(h(1, 0) - 1.0 / 3.0),
                          std::abs(h(2, 0) - r6),
                          std::abs(pooled(0) - (2.0 * r6 + 1.0 / 3.0) / 3.0)});
  const auto& p = gen.propagation.entries;
  hand = std::max({hand, std::abs(p(0, 0) - 0.5), std::abs(p(1, 1) - 1.0 / 3.0),
                   std::abs(p(0, 1) - r6), std::abs(p(0, 2))});

  double perm = 0.0;
  std::mt19937_64 rng(505);
  for (int k = 0; k < 20; ++k) {
    const int n = 4 + k % 7;
    const IntegratedModel model(ArchitectureConfig{}, random_adjacency(n, rng, 0.4), 500 + k);
    const auto s = random_sample(n, 2, kExoDim, rng);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> pm(n);
    for (int i = 0; i < n; ++i) pm.indices()(i) = order[i];
    const auto& g = model.generator();
    const Propagation conj{pm * g.propagation.entries * pm.transpose()};
    perm = std::max(perm, (gcn_forward(g, s.node_features, g.propagation) -
                           gcn_forward(g, pm * s.node_features, conj))
                              .cwiseAbs()
                              .maxCoeff());
  }
  return {hand <= 1e-9 && perm <= 1e-9,
          "hand example error " + fmt("%.3g", hand) + ", permutation error " + fmt("%.3g", perm)};
}

struct PlantedRun {
  std::uint64_t seed = 0;
  double spearman_rho = 0.0;
  int top = -1;
  int dominant = -1;
  double integrated_mape_com = 0.0;
  std::vector<std::pair<std::string, double>> benchmark_mape_com;
  double seconds = 0.0;
};

/// Synthetic data with the default generator, integrated model with the
/// default configuration, explanation on the whole test split and the full
/// benchmark suite.
PlantedRun planted_run(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  cfg.set_seed(seed);
  const auto truth = cfg.synth.ground_truth(seed);
  const auto data = synthesize(cfg.synth.locations, cfg.synth.days, truth);
  const auto split = plan_split(data, cfg.split);
  const auto sets = build_samples(data.load, data.weather, split);
  const auto adj = build_adjacency(data.locations, cfg.graph);
  const auto run = train_integrated(cfg.architecture, adj, sets, split, cfg.trainer, cfg.hours);

  PlantedRun out;
  out.seed = seed;
  const auto imp = explain_locations(run.model, sets.test, cfg.explain_options(1),
                                     split.normalization.target, "MW");
  std::vector<double> importance(imp.importance.data(), imp.importance.data() + imp.importance.size());
  out.spearman_rho = spearman(importance, truth.weights);
  out.top = imp.ranking.front();
  out.dominant = static_cast<int>(std::max_element(truth.weights.begin(), truth.weights.end()) -
                                  truth.weights.begin());
  out.integrated_mape_com = run.test.mape_com.value_or(1e300);

  SuiteOptions so;
  so.trainer = cfg.trainer;
  so.hidden = cfg.benchmark.hidden;
  so.hours = cfg.hours;
  const auto suite = run_suite(sets, split, cfg.synth.locations, so);
  for (const auto& r : suite.singles) out.benchmark_mape_com.emplace_back(r.spec.name(), *r.test.mape_com);
  out.benchmark_mape_com.emplace_back("none", *suite.none->test.mape_com);
  out.benchmark_mape_com.emplace_back("all", *suite.all->test.mape_com);
  out.benchmark_mape_com.emplace_back("average", *suite.average->test.mape_com);
  out.benchmark_mape_com.emplace_back("HT", *suite.hongtao->selected.test.mape_com);
  out.seconds = elapsed_s(t0);
  std::printf("  seed %llu: rho %.3f, top %d (planted %d), integrated MAPE_Com %.3f, best benchmark %.3f, %.0f s\n",
              static_cast<unsigned long long>(seed), out.spearman_rho, out.top, out.dominant,
              out.integrated_mape_com,
              std::min_element(out.benchmark_mape_com.begin(), out.benchmark_mape_com.end(),
                               [](auto& a, auto& b) { return a.second < b.second; })
                  ->second,
              out.seconds);
  std::fflush(stdout);
  return out;
}

// 6. The explainer recovers the planted location importance.
Outcome planted_recovery(const std::vector<PlantedRun>& runs) {
  int good = 0;
  std::string rhos;
  double seconds = 0.0;
  for (const auto& r : runs) {
    good += (r.spearman_rho >= 0.6 && r.top == r.dominant) ? 1 : 0;
    rhos += (rhos.empty() ? "" : " ") + fmt("%.2f", r.spearman_rho);
    seconds += r.seconds;
  }
  return {good >= 4 && seconds < 15 * 60 + 45 * 60,
          std::to_string(good) + "/5 seeds with rho >= 0.6 and planted location first (rho " + rhos + ")"};
}

// 7. The integrated model beats every benchmark in the median over seeds.
Outcome forecasting_advantage(const std::vector<PlantedRun>& runs) {
  std::vector<double> integrated;
  for (const auto& r : runs) integrated.push_back(r.integrated_mape_com);
  const double median_integrated = median(integrated);

  std::string best_name;
  double best_median = 1e300;
  for (std::size_t b = 0; b < runs.front().benchmark_mape_com.size(); ++b) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.benchmark_mape_com[b].second);
    const double m = median(v);
    if (m < best_median) {
      best_median = m;
      best_name = runs.front().benchmark_mape_com[b].first;
    }
  }
  // Per-seed margin against that seed's best benchmark.
  std::vector<double> margins;
  for (const auto& r : runs) {
    double best = 1e300;
    for (const auto& [name, v] : r.benchmark_mape_com) best = std::min(best, v);
    margins.push_back(r.integrated_mape_com - best);
  }
  const double median_margin = median(margins);
  return {median_integrated <= best_median && median_margin <= 0.0,
          "median MAPE_Com integrated " + fmt("%.3f", median_integrated) + " vs best benchmark " +
              best_name + " " + fmt("%.3f", best_median) + "; median per-seed margin " +
              fmt("%.3f", median_margin)};
}

// 8. Hongtao selection emits both curves and finds the single relevant location.
Outcome hongtao_machinery() {
  std::vector<double> rank_of_zero;
  bool curves = true;
  int differing = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig cfg;
    cfg.set_seed(seed);
    cfg.synth.weights.assign(cfg.synth.locations, 0.0);
    cfg.synth.weights[0] = 1.0;
    cfg.synth.noise_level = 0.005;
    const auto truth = cfg.synth.ground_truth(seed);
    const auto data = synthesize(cfg.synth.locations, cfg.synth.days, truth);
    const auto split = plan_split(data, cfg.split);
    const auto sets = build_samples(data.load, data.weather, split);
    SuiteOptions so;
    so.trainer = cfg.trainer;
    so.hidden = cfg.benchmark.hidden;
    so.include_singles = true;
    const auto suite = run_suite(sets, split, cfg.synth.locations, so);
    const auto& ht = *suite.hongtao;
    const int n = cfg.synth.locations;

    const auto report = nlohmann::json::parse(benchmark_report_json(suite, std::nullopt, {cfg.hash(), seed}, "-"));
    const auto& h = report.at("hongtao");
    curves &= h.at("validation_MAE").size() == static_cast<std::size_t>(n) &&
              h.at("test_MAE").size() == static_cast<std::size_t>(n) && h.contains("k_star") &&
              h.contains("k_test_best");
    curves &= ht.k_star == argmin_first(ht.validation_mae) + 1;
    differing += ht.k_star != ht.k_test_best ? 1 : 0;

    const auto pos = std::find(ht.ranking.begin(), ht.ranking.end(), 0) - ht.ranking.begin();
    rank_of_zero.push_back(static_cast<double>(pos + 1));
    std::printf("  seed %llu: ranking head %d, k* %d, test-best k %d\n",
                static_cast<unsigned long long>(seed), ht.ranking.front(), ht.k_star, ht.k_test_best);
    std::fflush(stdout);
  }
  const double med = median(rank_of_zero);
  return {curves && med == 1.0,
          "median rank of the relevant location " + fmt("%.0f", med) + "; k* differs from test-best k in " +
              std::to_string(differing) + "/5 seeds; curves emitted " + (curves ? "yes" : "no")};
}

// 9. Metric golden values and composite identity.
Outcome metric_goldens() {
  bool ok = true;
  const std::vector<double> y{100, 200}, f{110, 190};
  ok &= mae(y, y) == 0.0;
  ok &= mae(y, f) == 10.0;
  ok &= mae(std::vector<double>{5}, std::vector<double>{3}) == 2.0;
  ok &= mape(y, y) == 0.0;
  ok &= std::abs(mape(y, f) - 7.5) < 1e-12;
  ok &= mape(std::vector<double>{100}, std::vector<double>{0}) == 100.0;
  ok &= std::abs(composite(10, 20, 5) - 11.0) < 1e-12;

  std::vector<Timestamp> times;
  std::vector<double> actual, forecast;
  const auto t0 = parse_timestamp("2021-01-04T00:00:00Z");
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(500, 1500), e(-50, 50);
  for (int h = 0; h < 24 * 14; ++h) {
    times.push_back(t0 + std::chrono::hours{h});
    actual.push_back(u(rng));
    forecast.push_back(actual.back() + e(rng));
  }
  const auto r = stratified(actual, forecast, times);
  const double identity = std::max(
      std::abs(*r.mae_com - (0.6 * r.mae + 0.2 * *r.mae_noon + 0.2 * *r.mae_night)),
      std::abs(*r.mape_com - (0.6 * r.mape + 0.2 * *r.mape_noon + 0.2 * *r.mape_night)));
  ok &= identity <= 1e-12;

  std::vector<double> flat_f;
  for (double a : actual) flat_f.push_back(a + 7.0);
  const auto flat = stratified(actual, flat_f, times);
  ok &= std::abs(*flat.mae_noon - flat.mae) < 1e-12 && std::abs(*flat.mae_com - flat.mae) < 1e-12;

  std::vector<Timestamp> noon_only;
  for (int d = 0; d < 3; ++d) noon_only.push_back(t0 + std::chrono::hours{24 * d + 11});
  const std::vector<double> three{1, 2, 3};
  const auto partial = stratified(three, three, noon_only);
  ok &= !partial.mae_night && !partial.composite_available();
  return {ok, "golden examples and composite identity (residual " + fmt("%.2g", identity) + ")"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GEOLOAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. Two synth -> train -> explain runs produce byte-identical JSON.
Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / ("geoload_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> failures;
  for (const char* tag : {"a", "b"}) {
    const fs::path dir = root / tag;
    const std::string d = (dir / "data").string(), m = (dir / "model.json").string();
    if (run_cli("synth --seed 11 --out " + d) != 0 ||
        run_cli("train --seed 11 --data " + d + " --model " + m) != 0 ||
        run_cli("explain --seed 11 --data " + d + " --model " + m + " --out " +
                (dir / "explanation.json").string()) != 0) {
      failures.push_back(std::string("pipeline failed in run ") + tag);
    }
  }
  int compared = 0;
  for (const char* rel : {"data/ground_truth.json", "model.json", "explanation.json",
                          "explanation.csv", "history.csv", "data/load.csv"}) {
    const auto a = slurp(root / "a" / rel), b = slurp(root / "b" / rel);
    if (a.empty() || a != b) failures.push_back(std::string(rel) + " differs");
    ++compared;
  }
  fs::remove_all(root);
  std::string detail = std::to_string(compared) + " artifacts compared";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  std::vector<PlantedRun> planted;
  auto ensure_planted = [&] {
    if (planted.empty()) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) planted.push_back(planted_run(seed));
    }
  };
  const std::vector<Criterion> criteria{
      {1, "exact vs kernel equivalence", exact_vs_kernel},
      {2, "Monte Carlo convergence", monte_carlo_convergence},
      {3, "Shapley axioms", shapley_axioms},
      {4, "gradient fidelity", gradient_fidelity},
      {5, "GCN correctness", gcn_correctness},
      {6, "planted importance recovery", [&] { ensure_planted(); return planted_recovery(planted); }},
      {7, "forecasting advantage", [&] { ensure_planted(); return forecasting_advantage(planted); }},
      {8, "Hongtao machinery", hongtao_machinery},
      {9, "metric golden tests", metric_goldens},
      {10, "determinism", cli_determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), elapsed_s(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
