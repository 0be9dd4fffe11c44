#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace leafnet {

/// Interleaved (row, column, channel) pixels as reals. Decoded images always
/// have 3 channels with values in [0, 255].
struct ImageBuffer {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 3;
  std::vector<float> pixels;

  ImageBuffer() = default;
  ImageBuffer(std::int64_t h, std::int64_t w, std::int64_t c = 3, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h * w * c), fill) {}

  float& at(std::int64_t y, std::int64_t x, std::int64_t c) {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  float at(std::int64_t y, std::int64_t x, std::int64_t c) const {
    return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// PNG or JPEG, sniffed from the leading bytes. Grayscale is replicated to
/// three channels, alpha is dropped, 16-bit samples are reduced to 8 bits.
/// `name` only labels error messages.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>");
ImageBuffer decode_image_file(const std::filesystem::path& path);

/// 8-bit PNG (RGB for 3 channels, gray for 1). Values are rounded and
/// clamped to [0, 255]. Output bytes depend only on the pixels.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality = 90);

/// Bilinear resampling with half-pixel centres: the source coordinate of
/// output index d is (d + 0.5) * in / out - 0.5, clamped to the image.
ImageBuffer resize_bilinear(const ImageBuffer& img, std::int64_t out_h, std::int64_t out_w);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace leafnet
