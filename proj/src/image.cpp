#include "leafnet/image.hpp"

#include <png.h>
// jpeglib.h needs size_t and FILE declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>

#include "leafnet/errors.hpp"

namespace leafnet {
namespace {

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

// --- PNG -------------------------------------------------------------------

struct PngReadSource {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

struct PngErrorState {
  char message[256] = "unknown libpng error";
};

void png_on_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof state->message, "%s", msg);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->bytes.data() + src->offset, length);
  src->offset += length;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  PngErrorState err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error, png_on_warning);
  if (!png) throw DecodeError(name + ": cannot initialise PNG reader");
  png_infop info = png_create_info_struct(png);
  PngReadSource src{bytes, 0};
  ImageBuffer img;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(name + ": " + err.message);
  }
  png_set_read_fn(png, &src, png_read_from_span);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (png_get_channels(png, info) != 3 || rowbytes != static_cast<std::size_t>(w) * 3) {
    png_error(png, "unsupported PNG pixel layout");
  }
  raw.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img = ImageBuffer(h, w, 3);
  std::transform(raw.begin(), raw.end(), img.pixels.begin(), [](png_byte v) { return float(v); });
  return img;
}

std::vector<std::uint8_t> to_bytes(const ImageBuffer& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), [](float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return out;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

// --- JPEG ------------------------------------------------------------------

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = "unknown libjpeg error";
};

void jpeg_on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Warnings (e.g. premature end of data) mean the image is damaged.
void jpeg_on_message(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_on_error(cinfo);
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& name) {
  jpeg_decompress_struct cinfo{};
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_on_error;
  err.mgr.emit_message = jpeg_on_message;
  std::vector<std::uint8_t> raw;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError(name + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  const bool gray = cinfo.jpeg_color_space == JCS_GRAYSCALE;
  cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const auto w = static_cast<std::int64_t>(cinfo.output_width);
  const auto h = static_cast<std::int64_t>(cinfo.output_height);
  const auto comps = static_cast<std::int64_t>(cinfo.output_components);
  raw.resize(static_cast<std::size_t>(w * h * comps));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * comps;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  ImageBuffer img(h, w, 3);
  for (std::int64_t i = 0; i < w * h; ++i)
    for (std::int64_t c = 0; c < 3; ++c)
      img.pixels[i * 3 + c] = static_cast<float>(raw[i * comps + (comps == 1 ? 0 : c)]);
  return img;
}

}  // namespace

ImageBuffer decode_image(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (is_png(bytes)) return decode_png(bytes, name);
  if (is_jpeg(bytes)) return decode_jpeg(bytes, name);
  throw DecodeError(name + ": not a PNG or JPEG stream");
}

ImageBuffer decode_image_file(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const IoError& e) {
    throw DecodeError(e.what());
  }
  return decode_image(bytes, path.string());
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  if (img.channels != 3 && img.channels != 1) throw ArgumentError("encode_png: need 1 or 3 channels");
  std::vector<std::uint8_t> pixels = to_bytes(img);
  std::vector<std::uint8_t> out;
  PngErrorState err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error, png_on_warning);
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(std::string("encode_png: ") + err.message);
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width * img.channels);
  for (std::int64_t y = 0; y < img.height; ++y) rows[y] = pixels.data() + y * stride;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality) {
  if (img.channels != 3 && img.channels != 1) throw ArgumentError("encode_jpeg: need 1 or 3 channels");
  std::vector<std::uint8_t> pixels = to_bytes(img);
  jpeg_compress_struct cinfo{};
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_on_error;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw IoError(std::string("encode_jpeg: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = static_cast<int>(img.channels);
  cinfo.in_color_space = img.channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(img.width * img.channels);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = pixels.data() + cinfo.next_scanline * stride;
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, std::int64_t out_h, std::int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_bilinear: output dims must be >= 1");
  if (img.height < 1 || img.width < 1) throw ArgumentError("resize_bilinear: empty image");
  if (out_h == img.height && out_w == img.width) return img;

  struct Tap {
    std::int64_t lo, hi;
    float frac;
  };
  auto taps = [](std::int64_t in, std::int64_t out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t d = 0; d < out; ++d) {
      const double s = std::clamp((d + 0.5) * ratio - 0.5, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::int64_t>(std::floor(s));
      t[d] = {lo, std::min(lo + 1, in - 1), static_cast<float>(s - lo)};
    }
    return t;
  };
  const auto ty = taps(img.height, out_h);
  const auto tx = taps(img.width, out_w);
  const std::int64_t C = img.channels;
  ImageBuffer out(out_h, out_w, C);
  for (std::int64_t y = 0; y < out_h; ++y) {
    const Tap& a = ty[y];
    for (std::int64_t x = 0; x < out_w; ++x) {
      const Tap& b = tx[x];
      for (std::int64_t c = 0; c < C; ++c) {
        const float top = img.at(a.lo, b.lo, c) * (1 - b.frac) + img.at(a.lo, b.hi, c) * b.frac;
        const float bot = img.at(a.hi, b.lo, c) * (1 - b.frac) + img.at(a.hi, b.hi, c) * b.frac;
        out.at(y, x, c) = top * (1 - a.frac) + bot * a.frac;
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace leafnet
