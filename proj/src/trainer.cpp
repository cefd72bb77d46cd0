#include "geoload/trainer.hpp"

namespace geoload {

void TrainerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::config, "learning_rate must be finite and >= 0");
  }
  if (max_epochs < 1) throw Error(ErrorKind::config, "max_epochs must be >= 1");
  if (patience < 1) throw Error(ErrorKind::config, "patience must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::config, "batch_size must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0) throw Error(ErrorKind::config, "momentum must lie in [0, 1)");
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw Error(ErrorKind::config, "patience must be >= 1");
}

bool EarlyStopping::observe(int epoch, double validation_loss) {
  if (validation_loss < best_loss_) {
    best_loss_ = validation_loss;
    best_epoch_ = epoch;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

}  // namespace geoload
