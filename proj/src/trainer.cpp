#include "leafnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "leafnet/errors.hpp"
#include "leafnet/loss.hpp"

namespace leafnet {

void TrainingConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (!(val_split > 0.0 && val_split < 1.0)) throw ArgumentError("validation split must lie in (0, 1)");
  if (image_size < 8) throw ArgumentError("image size must be >= 8");
  augmentation.validate();
}

EvalResult evaluate(const Model& model, const ImageSet& data, std::size_t batch_size) {
  if (data.empty()) throw ArgumentError("evaluate: empty dataset");
  EvalResult r;
  r.predictions.reserve(data.size());
  double loss_sum = 0.0;
  std::int64_t correct = 0;
  for (const auto& idx : plan_eval_batches(data.size(), batch_size)) {
    const Batch b = gather_batch(data, idx);
    const auto trace = model_forward(model, b.images, Mode::Eval);
    loss_sum += sparse_ce_loss(trace.logits(), b.labels) * static_cast<double>(idx.size());
    for (const int p : argmax_rows(trace.probabilities)) r.predictions.push_back(p);
  }
  for (std::size_t i = 0; i < data.size(); ++i) correct += r.predictions[i] == data.labels()[i];
  r.loss = loss_sum / static_cast<double>(data.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return r;
}

StepResult train_step(Model& model, AdamState<float>& adam, const Tensor& images, std::span<const int> labels) {
  const auto trace = model_forward(model, images, Mode::Train);
  StepResult r;
  r.loss = sparse_ce_loss(trace.logits(), labels);
  if (!std::isfinite(r.loss)) throw NumericError("training diverged: non-finite loss");
  const auto predictions = argmax_rows(trace.probabilities);
  for (std::size_t i = 0; i < labels.size(); ++i) r.correct += predictions[i] == labels[i];
  const auto grads = model_backward(model, trace, sparse_ce_grad(trace.logits(), labels));
  adam_step(adam, model.params(), grads);
  return r;
}

std::vector<EpochRecord> fit(Model& model, const ImageSet& train, const ImageSet& val,
                             const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty() || val.empty()) throw ArgumentError("fit: training and validation sets must be non-empty");
  AdamState<float> adam(model.params(), config.adam);
  std::vector<EpochRecord> records;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng aug_rng(mix_seed(epoch_seed(config.seed, epoch), config.augmentation.seed), streams::kAugment);
    double loss_sum = 0.0;
    std::int64_t correct = 0, seen = 0, steps = 0;
    for (const auto& idx : plan_training_batches(train.size(), static_cast<std::size_t>(config.batch_size),
                                                 epoch, config.seed)) {
      Batch b = gather_batch(train, idx);
      if (config.augment) augment(b.images, config.augmentation, aug_rng);
      StepResult s;
      try {
        s = train_step(model, adam, b.images, b.labels);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + ", step " + std::to_string(steps + 1) + ": " +
                           e.what());
      }
      loss_sum += s.loss * static_cast<double>(idx.size());
      correct += s.correct;
      seen += static_cast<std::int64_t>(idx.size());
      ++steps;
    }
    const EvalResult v = evaluate(model, val, static_cast<std::size_t>(config.batch_size));
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    rec.val_loss = v.loss;
    rec.val_acc = v.accuracy;
    rec.steps = steps;
    rec.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return records;
}

}  // namespace leafnet
