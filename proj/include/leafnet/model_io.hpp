#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leafnet/model.hpp"

namespace leafnet {

// Model file layout (all integers little-endian):
//   "LEAFNET1"                      8 bytes
//   format version                  u16 (= 1)
//   class count                     u16, then per class: u16 byte length + UTF-8
//   input shape                     3 x u32 (H, W, C)
//   layer count                     u16, then per layer: u8 tag + u32 hyperparameters
//     1 Rescale (factor as f32 bits) | 2 Conv2D (filters) | 3 MaxPool | 4 Flatten
//     5 Dense (units, activation)    | 6 SoftmaxOutput (classes)
//   parameters                      f32, layer order, weights then bias
//   CRC-32 (IEEE)                   u32 over every preceding byte

inline constexpr std::uint16_t kModelFormatVersion = 1;

struct LoadedModel {
  Model model;
  std::vector<std::string> class_names;
  std::string model_id;  // CRC-32 of the file, 8 lowercase hex digits
};

std::vector<std::uint8_t> serialize_model(const Model& model, const std::vector<std::string>& class_names);

/// Throws BadMagicError, UnsupportedVersionError, TruncatedFileError,
/// ChecksumError or MalformedModelError.
LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const Model& model, const std::vector<std::string>& class_names, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace leafnet
