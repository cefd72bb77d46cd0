#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "geoload/error.hpp"
#include "geoload/nn.hpp"

namespace geoload::nn {

/// A model with an ordered parameter set, a scalar batch loss and an
/// analytic gradient of that loss.
template <class M>
concept Differentiable =
    requires(M& m, const M& cm, std::span<const typename M::Example> batch, const ParameterSet& p) {
      { cm.parameters() } -> std::same_as<ParameterSet>;
      m.set_parameters(p);
      { cm.loss(batch) } -> std::convertible_to<double>;
      { cm.backward(batch) } -> std::same_as<LossGradient>;
    };

[[noreturn]] void throw_non_finite_loss(const ParameterSet& params);

struct GradientMismatch {
  std::size_t array = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradientMismatch> flagged;

  bool passed() const { return flagged.empty(); }
};

struct GradientCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor: |a - n| / max(|a|, |n|, floor). Keeps entries whose
  /// true gradient is zero (dead relu paths) from dividing by round-off.
  double floor = 1e-7;
};

/// Compares `analytic` against central differences of model.loss(samples).
template <Differentiable M>
GradientReport compare_gradients(const M& model, std::span<const typename M::Example> samples,
                                 const GradientSet& analytic, GradientCheckOptions opts = {}) {
  if (!(opts.epsilon > 0.0)) throw Error(ErrorKind::config, "gradient check epsilon must be > 0");
  const ParameterSet base = model.parameters();
  if (!congruent(base, analytic)) {
    throw Error(ErrorKind::shape, "analytic gradient not congruent with parameters");
  }
  M probe = model;
  ParameterSet work = base;
  GradientReport report;
  for (std::size_t a = 0; a < base.arrays.size(); ++a) {
    for (Eigen::Index j = 0; j < base.arrays[a].cols(); ++j) {
      for (Eigen::Index i = 0; i < base.arrays[a].rows(); ++i) {
        const double theta = base.arrays[a](i, j);
        work.arrays[a](i, j) = theta + opts.epsilon;
        probe.set_parameters(work);
        const double up = probe.loss(samples);
        work.arrays[a](i, j) = theta - opts.epsilon;
        probe.set_parameters(work);
        const double down = probe.loss(samples);
        work.arrays[a](i, j) = theta;

        const double numeric = (up - down) / (2.0 * opts.epsilon);
        const double exact = analytic.arrays[a](i, j);
        const double denom = std::max({std::abs(exact), std::abs(numeric), opts.floor});
        const double rel = std::abs(exact - numeric) / denom;
        report.max_relative_error = std::max(report.max_relative_error, rel);
        ++report.checked;
        if (!(rel <= opts.tolerance)) report.flagged.push_back({a, i, j, exact, numeric, rel});
      }
    }
  }
  return report;
}

/// Maximum relative error between backward() and central differences over
/// every parameter; entries above the tolerance are flagged.
template <Differentiable M>
GradientReport check_gradients(const M& model, std::span<const typename M::Example> samples,
                               GradientCheckOptions opts = {}) {
  return compare_gradients(model, samples, model.backward(samples).gradients, opts);
}

}  // namespace geoload::nn
