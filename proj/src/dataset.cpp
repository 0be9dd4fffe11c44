#include "leafnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <numeric>

#include "leafnet/errors.hpp"
#include "leafnet/rng.hpp"

namespace fs = std::filesystem;

namespace leafnet {

bool has_image_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

ScanResult scan_directory(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw DatasetError("dataset root " + root.string() + " is not a directory");

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (class_dirs.size() < 2) {
    throw DatasetError("dataset root " + root.string() + " needs at least 2 class directories, found " +
                       std::to_string(class_dirs.size()));
  }

  ScanResult result;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(class_dirs[label])) {
      if (!entry.is_regular_file()) continue;
      if (has_image_extension(entry.path())) {
        images.push_back(entry.path());
      } else {
        ++result.skipped;
      }
    }
    if (images.empty()) throw DatasetError("class directory " + class_dirs[label].string() + " has no images");
    std::sort(images.begin(), images.end(), [](const fs::path& a, const fs::path& b) {
      return a.filename().string() < b.filename().string();
    });
    result.class_names.push_back(class_dirs[label].filename().string());
    for (auto& p : images) result.files.push_back({std::move(p), static_cast<int>(label)});
  }
  return result;
}

std::size_t validation_count(std::size_t n, double val_split) {
  if (!(val_split > 0.0 && val_split < 1.0)) throw ArgumentError("val_split must lie in (0, 1)");
  if (n < 2) throw DatasetError("need at least 2 files to split, got " + std::to_string(n));
  const auto k = static_cast<std::size_t>(std::llround(val_split * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

namespace {

template <typename V>
void fisher_yates(V& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.bounded(static_cast<std::uint32_t>(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

DatasetSplit split_train_val(const std::vector<std::string>& class_names,
                             const std::vector<LabeledFile>& files, double val_split,
                             std::uint64_t seed) {
  const std::size_t n_val = validation_count(files.size(), val_split);
  for (const auto& f : files) {
    if (f.label < 0 || static_cast<std::size_t>(f.label) >= class_names.size()) {
      throw DatasetError("label " + std::to_string(f.label) + " of " + f.path.string() + " is out of range");
    }
  }
  std::vector<LabeledFile> shuffled = files;
  Rng rng(seed, streams::kSplit);
  fisher_yates(shuffled, rng);
  DatasetSplit split;
  split.class_names = class_names;
  split.val.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
  return split;
}

std::uint64_t epoch_seed(std::uint64_t base_seed, int epoch) {
  return mix_seed(base_seed, static_cast<std::uint64_t>(epoch));
}

std::vector<std::size_t> epoch_order(std::size_t n, int epoch, std::uint64_t base_seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(epoch_seed(base_seed, epoch), streams::kShuffle);
  fisher_yates(order, rng);
  return order;
}

std::vector<std::vector<std::size_t>> chunk_batches(const std::vector<std::size_t>& order,
                                                    std::size_t batch_size) {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<std::vector<std::size_t>> plan_training_batches(std::size_t n, std::size_t batch_size,
                                                            int epoch, std::uint64_t base_seed) {
  return chunk_batches(epoch_order(n, epoch, base_seed), batch_size);
}

std::vector<std::vector<std::size_t>> plan_eval_batches(std::size_t n, std::size_t batch_size) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return chunk_batches(order, batch_size);
}

ImageSet::ImageSet(std::int64_t height, std::int64_t width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw ArgumentError("ImageSet dimensions must be >= 1");
}

std::span<const float> ImageSet::image(std::size_t i) const {
  const auto n = static_cast<std::size_t>(image_elements());
  return std::span<const float>(pixels_).subspan(i * n, n);
}

void ImageSet::add(const ImageBuffer& img, int label) {
  if (img.height != height_ || img.width != width_ || img.channels != 3) {
    throw ShapeError("ImageSet::add: image is " + std::to_string(img.height) + "x" +
                     std::to_string(img.width) + "x" + std::to_string(img.channels) + ", set expects " +
                     std::to_string(height_) + "x" + std::to_string(width_) + "x3");
  }
  pixels_.insert(pixels_.end(), img.pixels.begin(), img.pixels.end());
  labels_.push_back(label);
}

ImageSet load_images(const std::vector<LabeledFile>& files, std::int64_t image_size) {
  const auto n = static_cast<std::int64_t>(files.size());
  std::vector<ImageBuffer> decoded(files.size());
  std::vector<std::exception_ptr> errors(files.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      decoded[i] = resize_bilinear(decode_image_file(files[i].path), image_size, image_size);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ImageSet set(image_size, image_size);
  for (std::size_t i = 0; i < files.size(); ++i) set.add(decoded[i], files[i].label);
  return set;
}

Batch gather_batch(const ImageSet& set, std::span<const std::size_t> indices) {
  const std::int64_t per = set.image_elements();
  Batch b{Tensor(Shape{static_cast<std::int64_t>(indices.size()), set.height(), set.width(), 3}), {}};
  b.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto img = set.image(indices[k]);
    std::copy(img.begin(), img.end(), b.images.data() + static_cast<std::int64_t>(k) * per);
    b.labels.push_back(set.labels()[indices[k]]);
  }
  return b;
}

std::vector<Batch> make_batches(const ImageSet& set, std::size_t batch_size, int epoch,
                                std::uint64_t base_seed) {
  std::vector<Batch> out;
  for (const auto& idx : plan_training_batches(set.size(), batch_size, epoch, base_seed)) {
    out.push_back(gather_batch(set, idx));
  }
  return out;
}

}  // namespace leafnet
