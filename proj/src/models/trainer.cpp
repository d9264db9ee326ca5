#include "gravamen/models/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "gravamen/error.hpp"
#include "gravamen/numcore/adam.hpp"

namespace gravamen::models {

LossValue classification_loss(num::Tape& tape, const Model& model, const num::ParamStore& store,
                              const Batch& batch, bool train, num::Rng& rng) {
  const auto fwd = model.forward(tape, store, batch, train, rng);
  return {num::cross_entropy(fwd.logits, batch.labels), 0.0, 0.0};
}

LossValue evaluate_loss(const Model& model, const num::ParamStore& store, std::span<const Example> data,
                        const LossFn& loss, std::size_t batch_size, double* total) {
  double sum = 0.0, com = 0.0, sev = 0.0;
  num::Rng rng(0);
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.resize(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    num::Tape tape(false);
    const auto v = loss(tape, model, store, make_batch(data, idx), false, rng);
    const double w = static_cast<double>(idx.size());
    sum += w * v.total.value().item();
    com += w * v.com;
    sev += w * v.sev;
  }
  const double n = static_cast<double>(data.size());
  if (total != nullptr) *total = sum / n;
  return {num::Var{}, com / n, sev / n};
}

TrainHistory fit(Model& model, const TrainConfig& cfg, std::span<const Example> train,
                 std::span<const Example> val, const LossFn& loss) {
  cfg.validate();
  if (train.empty()) throw DataError("empty training split");
  if (val.empty()) throw DataError("empty validation split");

  num::ParamStore& params = model.params();
  num::Adam adam(params, num::AdamConfig{cfg.learning_rate});
  num::Rng rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  num::ParamStore best = params;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, order.size() - start));
      try {
        num::Tape tape;
        const auto v = loss(tape, model, params, make_batch(train, idx), true, rng);
        const double w = static_cast<double>(idx.size());
        rec.train_loss += w * v.total.value().item();
        rec.train_com += w * v.com;
        rec.train_sev += w * v.sev;
        adam.step(params, tape.backward(v.total, params));
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no + 1) + ": " + e.what());
      }
    }
    const double n = static_cast<double>(train.size());
    rec.train_loss /= n;
    rec.train_com /= n;
    rec.train_sev /= n;
    try {
      const auto v = evaluate_loss(model, params, val, loss, std::max<std::size_t>(cfg.batch_size, 64), &rec.val_loss);
      rec.val_com = v.com;
      rec.val_sev = v.sev;
    } catch (const NumericError& e) {
      throw NumericError("validation loss not finite at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    history.epochs.push_back(rec);
    if (history.best_epoch == 0 || rec.val_loss < history.best_val_loss) {
      history.best_epoch = epoch;
      history.best_val_loss = rec.val_loss;
      best = params;
    }
  }
  params = best;
  return history;
}

}  // namespace gravamen::models
