#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "geoload/error.hpp"
#include "geoload/gradcheck.hpp"
#include "geoload/nn.hpp"

namespace geoload {

struct TrainerConfig {
  double learning_rate = 0.01;
  int max_epochs = 200;
  /// Epochs without strict validation improvement before stopping.
  int patience = 10;
  int batch_size = 32;
  std::uint64_t seed = 42;
  double momentum = 0.0;

  /// Throws a config error on out-of-range values. learning_rate 0 is
  /// accepted so that frozen runs can be expressed.
  void validate() const;
};

/// Tracks the best validation loss; epochs are 1-based.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  /// Records the epoch's validation loss. Returns true when this epoch is a
  /// new strict best.
  bool observe(int epoch, double validation_loss);
  bool should_stop() const { return epochs_since_best_ >= patience_; }

  double best_loss() const { return best_loss_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int epochs_since_best_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double best_validation_loss = 0.0;
};

template <class M>
struct TrainResult {
  M model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool diverged = false;
};

/// Mini-batch SGD over shuffled batches with early stopping. The returned
/// model carries the parameters of the best validation epoch.
template <nn::Differentiable M>
TrainResult<M> train(M model, std::span<const typename M::Example> train_set,
                     std::span<const typename M::Example> validation_set,
                     const TrainerConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || validation_set.empty()) {
    throw Error(ErrorKind::validation, "training requires non-empty train and validation sets");
  }
  using Example = typename M::Example;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));

  nn::SgdOptimizer optimizer(cfg.learning_rate, cfg.momentum);
  EarlyStopping stopper(cfg.patience);
  nn::ParameterSet best = model.parameters();
  TrainResult<M> result{model, {}, 0, false};

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    bool failed = false;
    for (std::size_t start = 0; start < order.size(); start += batch.capacity()) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + batch.capacity());
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train_set[order[k]]);
      nn::LossGradient lg;
      try {
        lg = model.backward(std::span<const Example>(batch));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        failed = true;
        break;
      }
      loss_sum += lg.loss * static_cast<double>(batch.size());
      seen += batch.size();
      model.set_parameters(optimizer.step(model.parameters(), lg.gradients));
    }
    const double val_loss = failed ? std::numeric_limits<double>::quiet_NaN()
                                   : model.loss(validation_set);
    if (failed || !std::isfinite(val_loss)) {
      result.diverged = true;
      break;
    }
    if (stopper.observe(epoch, val_loss)) best = model.parameters();
    result.history.push_back({epoch, loss_sum / static_cast<double>(seen), val_loss,
                              stopper.best_loss()});
    if (stopper.should_stop()) break;
  }

  model.set_parameters(best);
  result.model = std::move(model);
  result.best_epoch = stopper.best_epoch();
  return result;
}

}  // namespace geoload
