#include "leafnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "leafnet/errors.hpp"

namespace fs = std::filesystem;

namespace leafnet {
namespace {

struct Rgb {
  double r, g, b;
};

// h in degrees, s and v in [0, 1]; result in [0, 255].
Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1 - std::abs(std::fmod(h / 60.0, 2.0) - 1));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0};
}

enum class Motif { Spots, Stripes, Blotches };

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

}  // namespace

ImageBuffer synth_leaf(int label, std::int64_t size, Rng& rng) {
  if (label < 0 || label >= static_cast<int>(kDiseaseClasses.size())) throw ArgumentError("synth_leaf: label out of range");
  if (size < 16) throw ArgumentError("synth_leaf: size must be >= 16");

  const double hue = 45.0 * label + rng_uniform(rng, -8.0, 8.0);
  const double sat = rng_uniform(rng, 0.55, 0.75);
  const double val = rng_uniform(rng, 0.6, 0.8);
  const Rgb leaf = hsv_to_rgb(hue, sat, val);
  const Rgb lesion = hsv_to_rgb(hue + 20.0, std::min(1.0, sat + 0.2), val * 0.35);
  const auto motif = static_cast<Motif>(label % 3);

  // Lesion geometry in unit coordinates.
  struct Blob {
    double x, y, r;
  };
  std::vector<Blob> blobs;
  double stripe_angle = 0, stripe_freq = 0, stripe_phase = 0;
  switch (motif) {
    case Motif::Spots: {
      const int count = 6 + static_cast<int>(rng.bounded(5));
      for (int i = 0; i < count; ++i)
        blobs.push_back({rng_uniform(rng, 0.1, 0.9), rng_uniform(rng, 0.1, 0.9), rng_uniform(rng, 0.04, 0.07)});
      break;
    }
    case Motif::Stripes:
      stripe_angle = rng_uniform(rng, -0.4, 0.4) + (label % 2 ? std::numbers::pi / 2 : 0.0);
      stripe_freq = rng_uniform(rng, 4.0, 6.0);
      stripe_phase = rng_uniform(rng, 0.0, 2 * std::numbers::pi);
      break;
    case Motif::Blotches: {
      const int count = 2 + static_cast<int>(rng.bounded(2));
      for (int i = 0; i < count; ++i)
        blobs.push_back({rng_uniform(rng, 0.25, 0.75), rng_uniform(rng, 0.25, 0.75), rng_uniform(rng, 0.12, 0.2)});
      break;
    }
  }
  const double light_dir = rng_uniform(rng, 0.0, 2 * std::numbers::pi);

  ImageBuffer img(size, size, 3);
  const double inv = 1.0 / static_cast<double>(size);
  for (std::int64_t y = 0; y < size; ++y) {
    for (std::int64_t x = 0; x < size; ++x) {
      const double u = (x + 0.5) * inv, v = (y + 0.5) * inv;
      double amount = 0.0;
      if (motif == Motif::Stripes) {
        const double t = u * std::cos(stripe_angle) + v * std::sin(stripe_angle);
        amount = smoothstep(0.55, 0.85, std::sin(2 * std::numbers::pi * stripe_freq * t + stripe_phase));
      } else {
        for (const Blob& b : blobs) {
          const double d = std::hypot(u - b.x, v - b.y) / b.r;
          amount = std::max(amount, 1.0 - smoothstep(0.7, 1.0, d));
        }
      }
      const double shade = 1.0 + 0.12 * ((u - 0.5) * std::cos(light_dir) + (v - 0.5) * std::sin(light_dir));
      const double rgb_leaf[3] = {leaf.r, leaf.g, leaf.b};
      const double rgb_lesion[3] = {lesion.r, lesion.g, lesion.b};
      for (int c = 0; c < 3; ++c) {
        const double base = (rgb_leaf[c] * (1 - amount) + rgb_lesion[c] * amount) * shade;
        const double noise = rng_uniform(rng, -10.0, 10.0);
        img.at(y, x, c) = static_cast<float>(std::clamp(std::round(base + noise), 0.0, 255.0));
      }
    }
  }
  return img;
}

std::uint64_t synth_image_seed(std::uint64_t seed, int label, std::int64_t index) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(label)), static_cast<std::uint64_t>(index));
}

void gen_synthetic(const fs::path& out_dir, std::int64_t per_class, std::int64_t size, std::uint64_t seed) {
  if (per_class < 1) throw ArgumentError("gen_synthetic: per_class must be >= 1");
  if (size < 16) throw ArgumentError("gen_synthetic: size must be >= 16");
  for (int label = 0; label < static_cast<int>(kDiseaseClasses.size()); ++label) {
    const fs::path dir = out_dir / std::string(kDiseaseClasses[label]);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::vector<std::uint8_t>> encoded(static_cast<std::size_t>(per_class));
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < per_class; ++i) {
      Rng rng(synth_image_seed(seed, label, i), streams::kSynthetic);
      encoded[i] = encode_png(synth_leaf(label, size, rng));
    }
    for (std::int64_t i = 0; i < per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "img_%04lld.png", static_cast<long long>(i));
      write_file_bytes(dir / name, encoded[i]);
    }
  }
}

}  // namespace leafnet
