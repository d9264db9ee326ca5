#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gravamen/models/model.hpp"

namespace gravamen::models {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  // Per-task parts for multi-task training; zero otherwise.
  double train_com = 0.0, train_sev = 0.0;
  double val_com = 0.0, val_sev = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based epoch whose parameters were kept
  double best_val_loss = 0.0;
};

struct LossValue {
  num::Var total;
  double com = 0.0;
  double sev = 0.0;
};

using LossFn = std::function<LossValue(num::Tape&, const Model&, const num::ParamStore&, const Batch&, bool train,
                                       num::Rng&)>;

// Mean categorical cross-entropy of the softmax head against Example::label.
LossValue classification_loss(num::Tape& tape, const Model& model, const num::ParamStore& store,
                              const Batch& batch, bool train, num::Rng& rng);

// Adam over shuffled mini-batches for cfg.epochs epochs. After every epoch the validation loss
// is measured in eval mode; the model ends holding the parameters of the epoch with the lowest
// validation loss (earliest on ties). A non-finite value aborts with a NumericError naming the
// epoch and batch.
TrainHistory fit(Model& model, const TrainConfig& cfg, std::span<const Example> train,
                 std::span<const Example> val, const LossFn& loss);

inline TrainHistory train_model(Model& model, const TrainConfig& cfg, std::span<const Example> train,
                                std::span<const Example> val) {
  return fit(model, cfg, train, val, classification_loss);
}

// Mean loss over a data set in eval mode, batch-size weighted.
LossValue evaluate_loss(const Model& model, const num::ParamStore& store, std::span<const Example> data,
                        const LossFn& loss, std::size_t batch_size, double* total);

}  // namespace gravamen::models
