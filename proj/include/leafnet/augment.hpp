#pragma once

#include <cstdint>

#include "leafnet/image.hpp"
#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet {

struct AugmentConfig {
  bool horizontal_flip = true;
  /// Rotation angle is uniform in +-rotation_factor * 2*pi radians.
  double rotation_factor = 0.1;
  /// Sampling scale is uniform in [1 - zoom_factor, 1 + zoom_factor].
  double zoom_factor = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const { return !horizontal_flip && rotation_factor == 0.0 && zoom_factor == 0.0; }
};

/// One concrete draw of the random transform.
struct AffineParams {
  bool flip = false;
  double angle = 0.0;  // radians, counter-clockwise as displayed
  double scale = 1.0;  // > 1 shows more of the scene (zoom out)

  bool is_identity() const { return !flip && angle == 0.0 && scale == 1.0; }
};

AffineParams draw_affine(const AugmentConfig& config, Rng& rng);

/// Mirror, then rotate and scale about the image centre. Samples outside the
/// image are filled by reflection; resampling is bilinear. A pure mirror is
/// exact, and identity parameters return the input bitwise.
ImageBuffer apply_affine(const ImageBuffer& img, const AffineParams& params);

ImageBuffer flip_horizontal(const ImageBuffer& img);

/// Augments every image of a (N, H, W, C) batch in place with its own draw.
/// Output values are clamped to [0, 255].
void augment(Tensor& batch, const AugmentConfig& config, Rng& rng);

}  // namespace leafnet
