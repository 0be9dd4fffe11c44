#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leafnet/image.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

struct LabeledFile {
  std::filesystem::path path;
  int label = 0;

  friend bool operator==(const LabeledFile&, const LabeledFile&) = default;
};

struct ScanResult {
  std::vector<std::string> class_names;  // sorted ascending; label = index
  std::vector<LabeledFile> files;        // grouped by class, sorted by name
  std::int64_t skipped = 0;              // non-image files ignored
};

/// True for .png/.jpg/.jpeg in any letter case.
bool has_image_extension(const std::filesystem::path& path);

/// One subdirectory per class. Throws DatasetError for a missing root, fewer
/// than two classes, or a class directory without image files.
ScanResult scan_directory(const std::filesystem::path& root);

struct DatasetSplit {
  std::vector<std::string> class_names;
  std::vector<LabeledFile> train;
  std::vector<LabeledFile> val;
};

/// Number of validation files for n files: round(val_split * n) clamped to
/// [1, n - 1] so neither side is empty.
std::size_t validation_count(std::size_t n, double val_split);

/// Fisher-Yates shuffle of all files with Rng(seed, streams::kSplit); the
/// first validation_count() files become the validation set.
DatasetSplit split_train_val(const std::vector<std::string>& class_names,
                             const std::vector<LabeledFile>& files, double val_split,
                             std::uint64_t seed);

/// Seed of the training shuffle for one epoch.
std::uint64_t epoch_seed(std::uint64_t base_seed, int epoch);

/// Permutation of [0, n) used as the training order of `epoch`.
std::vector<std::size_t> epoch_order(std::size_t n, int epoch, std::uint64_t base_seed);

/// Consecutive chunks of `order`; the last one may be short.
std::vector<std::vector<std::size_t>> chunk_batches(const std::vector<std::size_t>& order,
                                                    std::size_t batch_size);

/// Index batches of a training epoch (shuffled) ...
std::vector<std::vector<std::size_t>> plan_training_batches(std::size_t n, std::size_t batch_size,
                                                            int epoch, std::uint64_t base_seed);
/// ... and of an evaluation pass (natural order).
std::vector<std::vector<std::size_t>> plan_eval_batches(std::size_t n, std::size_t batch_size);

/// Decoded images resized to a common size, kept in memory.
class ImageSet {
 public:
  ImageSet() = default;
  ImageSet(std::int64_t height, std::int64_t width);

  std::int64_t height() const { return height_; }
  std::int64_t width() const { return width_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::int64_t image_elements() const { return height_ * width_ * 3; }

  const std::vector<int>& labels() const { return labels_; }
  std::span<const float> image(std::size_t i) const;

  /// The image must already have the set's dimensions.
  void add(const ImageBuffer& img, int label);

 private:
  std::int64_t height_ = 0;
  std::int64_t width_ = 0;
  std::vector<float> pixels_;
  std::vector<int> labels_;
};

/// Decodes and resizes every file to image_size x image_size. Files are
/// decoded in parallel; the result keeps the input order. A decode failure
/// rethrows the error of the first failing file in list order.
ImageSet load_images(const std::vector<LabeledFile>& files, std::int64_t image_size);

struct Batch {
  Tensor images;  // (N, H, W, 3), values in [0, 255]
  std::vector<int> labels;
};

Batch gather_batch(const ImageSet& set, std::span<const std::size_t> indices);

/// All training batches of one epoch, materialized.
std::vector<Batch> make_batches(const ImageSet& set, std::size_t batch_size, int epoch,
                                std::uint64_t base_seed);

}  // namespace leafnet
