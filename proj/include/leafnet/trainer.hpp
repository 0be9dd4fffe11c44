#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "leafnet/adam.hpp"
#include "leafnet/augment.hpp"
#include "leafnet/dataset.hpp"
#include "leafnet/model.hpp"

namespace leafnet {

struct TrainingConfig {
  int epochs = 10;
  int batch_size = 32;
  double val_split = 0.2;
  std::int64_t image_size = 180;
  std::uint64_t seed = 42;
  bool augment = true;
  AugmentConfig augmentation;
  AdamConfig adam;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double train_acc = 0;
  double val_loss = 0;
  double val_acc = 0;
  double duration_seconds = 0;
  std::int64_t steps = 0;  // optimizer steps taken in the epoch
};

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
  std::vector<int> predictions;
};

/// Mean cross-entropy and argmax accuracy over a dataset, in eval mode and
/// natural order. Throws ArgumentError for an empty set.
EvalResult evaluate(const Model& model, const ImageSet& data, std::size_t batch_size = 32);

/// Batch-level statistics of one optimizer step.
struct StepResult {
  double loss = 0;
  std::int64_t correct = 0;
};

/// forward -> loss -> backward -> Adam on one batch.
/// Throws NumericError when the loss is not finite.
StepResult train_step(Model& model, AdamState<float>& adam, const Tensor& images, std::span<const int> labels);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains for config.epochs epochs. Each epoch reshuffles the training order
/// with epoch_seed(config.seed, epoch), augments training batches (never
/// validation) when enabled, and records sample-weighted running train
/// metrics plus a full validation pass.
std::vector<EpochRecord> fit(Model& model, const ImageSet& train, const ImageSet& val,
                             const TrainingConfig& config, const EpochCallback& on_epoch = {});

}  // namespace leafnet
