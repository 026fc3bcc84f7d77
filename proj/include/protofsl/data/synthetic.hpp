#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "protofsl/core/error.hpp"
#include "protofsl/core/rng.hpp"
#include "protofsl/data/types.hpp"

namespace protofsl {

struct SyntheticOptions {
  std::size_t n_classes = 6;
  std::size_t images_per_class = 20;
  std::size_t image_size = kPatchSize;
  double separability = 1.0;
  std::uint64_t seed = 0;
  View view = View::SUR;
};

// Textured noise around a class signature (mean color + stripe frequency).
// Signatures collapse to a single shared one at separability 0, so classes
// are then statistically indistinguishable. Per-image variation (stripe
// orientation, brightness) scales with min(separability, 1); otherwise
// patches of one image would share a latent that tracks their class within a
// small test split.
inline std::vector<SourceImage> gen_synthetic_dataset(const SyntheticOptions& opt) {
  require(opt.n_classes >= 2 && opt.n_classes <= kAllClasses.size(), "gen_synthetic_dataset: n_classes must be in [2, 6]");
  require(opt.separability >= 0.0, "gen_synthetic_dataset: separability must be non-negative");
  require(opt.images_per_class >= 1, "gen_synthetic_dataset: images_per_class must be at least 1");
  require(opt.image_size >= 1, "gen_synthetic_dataset: image_size must be positive");

  // Well-spread color directions, one per class.
  static constexpr std::array<std::array<double, 3>, 6> kColorDir{{
      {1.0, 0.0, -0.5}, {-0.5, 1.0, 0.0}, {0.0, -0.5, 1.0}, {-1.0, 0.0, 0.5}, {0.5, -1.0, 0.0}, {0.0, 0.5, -1.0}}};
  constexpr double kColorScale = 45.0;
  constexpr double kBaseFrequency = 6.0;   // stripes per image side
  constexpr double kFrequencyStep = 3.0;
  constexpr double kTextureAmplitude = 25.0;
  constexpr double kNoiseSigma = 18.0;
  constexpr double kBrightnessJitter = 8.0;

  const std::size_t side = opt.image_size;
  const double nuisance = std::min(opt.separability, 1.0);
  std::vector<SourceImage> out;
  out.reserve(opt.n_classes * opt.images_per_class);
  for (std::size_t k = 0; k < opt.n_classes; ++k) {
    const StoneClass cls = kAllClasses[k];
    const double frequency = kBaseFrequency + opt.separability * kFrequencyStep * static_cast<double>(k);
    std::array<double, 3> color{};
    for (std::size_t c = 0; c < 3; ++c) color[c] = 128.0 + opt.separability * kColorScale * kColorDir[k][c];
    for (std::size_t i = 0; i < opt.images_per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "synth_%04zu.png", i);
      SourceImage img;
      img.image_id = to_string(opt.view) + "/" + to_string(cls) + "/" + name;
      img.class_key = cls;
      img.view = opt.view;
      img.width = side;
      img.height = side;
      Rng rng(mix_seeds(opt.seed, fnv1a(img.image_id)));
      const double theta = nuisance * rng.uniform(0.0, std::numbers::pi);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double jitter = nuisance * rng.normal() * kBrightnessJitter;
      const double wx = 2.0 * std::numbers::pi * frequency * std::cos(theta) / static_cast<double>(side);
      const double wy = 2.0 * std::numbers::pi * frequency * std::sin(theta) / static_cast<double>(side);
      auto px = std::make_shared<std::vector<std::uint8_t>>(side * side * kChannels);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double texture = kTextureAmplitude * std::sin(wx * static_cast<double>(x) + wy * static_cast<double>(y) + phase);
          for (std::size_t c = 0; c < kChannels; ++c) {
            const double v = color[c] + jitter + texture + rng.normal() * kNoiseSigma;
            (*px)[(y * side + x) * kChannels + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
          }
        }
      }
      img.pixels = std::move(px);
      out.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace protofsl
