#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leafnet/dataset.hpp"
#include "leafnet/model.hpp"
#include "leafnet/trainer.hpp"

namespace leafnet {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(std::vector<std::string> class_names, std::vector<std::int64_t> counts);

  std::size_t classes() const { return names_.size(); }
  const std::vector<std::string>& class_names() const { return names_; }
  std::int64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes() + predicted]; }
  std::int64_t total() const;
  std::int64_t trace() const;
  double accuracy() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::int64_t> counts_;
};

/// Throws ArgumentError for mismatched/empty inputs or classes outside [0, K).
/// Class names default to "0".."K-1" when `class_names` is empty.
ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels, std::size_t classes,
                                 std::vector<std::string> class_names = {});

struct FeatureMatrix {
  Tensor64 features;  // (n, d)
  std::vector<int> labels;
};

/// Penultimate activations (after ReLU) of every sample, in dataset order.
FeatureMatrix extract_features(const Model& model, const ImageSet& data, std::size_t batch_size = 32);

// --- CSV export -------------------------------------------------------------

/// epoch,train_loss,train_acc,val_loss,val_acc,duration_s with fixed
/// 6-decimal reals and '\n' line endings.
std::string metrics_csv(std::span<const EpochRecord> records);
void write_metrics_csv(std::span<const EpochRecord> records, const std::filesystem::path& path);
std::vector<EpochRecord> parse_metrics_csv(const std::string& text);

/// Header "class,<names...>", then one "<name>,<counts...>" row per true class.
std::string confusion_csv(const ConfusionMatrix& cm);
void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);
ConfusionMatrix parse_confusion_csv(const std::string& text);

/// x,y,label,class_name; one row per point.
std::string embeddings_csv(const Tensor64& points, std::span<const int> labels,
                           std::span<const std::string> class_names);

/// Writes metrics.csv and confusion.csv into `dir`.
void export_metrics(std::span<const EpochRecord> records, const ConfusionMatrix& cm,
                    const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace leafnet
