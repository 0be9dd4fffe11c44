#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>

#include "leafnet/image.hpp"
#include "leafnet/rng.hpp"

namespace leafnet {

/// Directory names of the eight disease classes, in sorted order.
inline constexpr std::array<std::string_view, 8> kDiseaseClasses = {
    "Corn_Grey_Leaf_Spot", "Potato_Early_Blight", "Potato_Late_Blight", "Rice_Bacterial_Blight",
    "Rice_Brown_Spot",     "Tomato_Early_Blight", "Wheat_Brown_Rust",   "Wheat_Yellow_Rust"};

/// A procedurally drawn leaf for class `label` (0..7): a class-specific hue
/// band plus a lesion motif (spots, stripes or blotches) with random
/// placement, lighting and pixel noise.
ImageBuffer synth_leaf(int label, std::int64_t size, Rng& rng);

/// Seed of image `index` of class `label` within a tree generated from `seed`.
std::uint64_t synth_image_seed(std::uint64_t seed, int label, std::int64_t index);

/// Writes out_dir/<class>/img_NNNN.png for each of the eight classes. The
/// tree is byte-identical for identical arguments.
/// Throws ArgumentError for per_class < 1 or size < 16, IoError on write failure.
void gen_synthetic(const std::filesystem::path& out_dir, std::int64_t per_class, std::int64_t size,
                   std::uint64_t seed);

}  // namespace leafnet
