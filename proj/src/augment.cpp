#include "leafnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "leafnet/errors.hpp"

namespace leafnet {
namespace {

// Reflects a continuous pixel coordinate into [-0.5, n - 0.5], mirroring
// about the outer pixel edges (d c b a | a b c d | d c b a).
double reflect(double u, std::int64_t n) {
  const double period = 2.0 * static_cast<double>(n);
  double t = std::fmod(u + 0.5, period);
  if (t < 0) t += period;
  if (t >= static_cast<double>(n)) t = period - t;
  return std::clamp(t - 0.5, 0.0, static_cast<double>(n - 1));
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(rotation_factor >= 0.0 && rotation_factor < 1.0)) throw ArgumentError("rotation_factor must lie in [0, 1)");
  if (!(zoom_factor >= 0.0 && zoom_factor < 1.0)) throw ArgumentError("zoom_factor must lie in [0, 1)");
}

AffineParams draw_affine(const AugmentConfig& config, Rng& rng) {
  AffineParams p;
  if (config.horizontal_flip) p.flip = rng.next_unit() < 0.5;
  if (config.rotation_factor > 0.0) {
    const double limit = config.rotation_factor * 2.0 * std::numbers::pi;
    p.angle = rng_uniform(rng, -limit, limit);
  }
  if (config.zoom_factor > 0.0) {
    p.scale = rng_uniform(rng, 1.0 - config.zoom_factor, 1.0 + config.zoom_factor);
  }
  return p;
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.height, img.width, img.channels);
  for (std::int64_t y = 0; y < img.height; ++y)
    for (std::int64_t x = 0; x < img.width; ++x)
      for (std::int64_t c = 0; c < img.channels; ++c) out.at(y, img.width - 1 - x, c) = img.at(y, x, c);
  return out;
}

ImageBuffer apply_affine(const ImageBuffer& img, const AffineParams& params) {
  if (params.is_identity()) return img;
  const ImageBuffer src = params.flip ? flip_horizontal(img) : img;
  if (params.angle == 0.0 && params.scale == 1.0) return src;

  const std::int64_t H = img.height, W = img.width, C = img.channels;
  const double cy = 0.5 * static_cast<double>(H - 1);
  const double cx = 0.5 * static_cast<double>(W - 1);
  const double cs = std::cos(params.angle);
  const double sn = std::sin(params.angle);
  ImageBuffer out(H, W, C);
  for (std::int64_t y = 0; y < H; ++y) {
    for (std::int64_t x = 0; x < W; ++x) {
      // Display coordinates (x right, y up) of the destination pixel, mapped
      // back through the inverse rotation and scaled.
      const double dx = static_cast<double>(x) - cx;
      const double dy = cy - static_cast<double>(y);
      const double sx = params.scale * (cs * dx + sn * dy);
      const double sy = params.scale * (-sn * dx + cs * dy);
      const double u = reflect(cx + sx, W);
      const double v = reflect(cy - sy, H);
      const auto x0 = static_cast<std::int64_t>(std::floor(u));
      const auto y0 = static_cast<std::int64_t>(std::floor(v));
      const std::int64_t x1 = std::min(x0 + 1, W - 1);
      const std::int64_t y1 = std::min(y0 + 1, H - 1);
      const auto fx = static_cast<float>(u - static_cast<double>(x0));
      const auto fy = static_cast<float>(v - static_cast<double>(y0));
      for (std::int64_t c = 0; c < C; ++c) {
        const float top = src.at(y0, x0, c) * (1 - fx) + src.at(y0, x1, c) * fx;
        const float bot = src.at(y1, x0, c) * (1 - fx) + src.at(y1, x1, c) * fx;
        out.at(y, x, c) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

void augment(Tensor& batch, const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (batch.shape().rank() != 4) throw ShapeError("augment: batch must be (N, H, W, C)");
  if (config.is_identity()) return;
  const Shape& s = batch.shape();
  const std::int64_t per = s[1] * s[2] * s[3];
  for (std::int64_t n = 0; n < s[0]; ++n) {
    const AffineParams p = draw_affine(config, rng);
    if (p.is_identity()) continue;
    float* data = batch.data() + n * per;
    ImageBuffer img(s[1], s[2], s[3]);
    std::copy(data, data + per, img.pixels.begin());
    const ImageBuffer out = apply_affine(img, p);
    std::transform(out.pixels.begin(), out.pixels.end(), data,
                   [](float v) { return std::clamp(v, 0.0f, 255.0f); });
  }
}

}  // namespace leafnet
