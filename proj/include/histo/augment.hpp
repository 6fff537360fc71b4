#pragma once

#include <cstdint>
#include <random>

#include "histo/image.hpp"

namespace histo {

using Rng = std::mt19937_64;

struct AugmentSpec {
  bool rotation90 = true;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double shift_fraction = 0.1;    // max |translation| as a fraction of width/height
  double zoom_range = 0.1;        // scale drawn from [1 - z, 1 + z]
  double brightness_delta = 0.1;  // additive shift drawn from [-d, d] * 255
  bool blur_sharpen = false;
  double cutmix_prob = 0.0;
  double cutmix_alpha = 1.0;
  double mixup_prob = 0.0;
  double mixup_alpha = 1.0;

  /// Everything off: apply_spatial is the identity.
  static AugmentSpec disabled();
  void validate() const;  // throws ConfigError
};

/// Independent stream for one data worker in one epoch.
Rng worker_rng(std::uint64_t global_seed, std::uint64_t worker_index, std::uint64_t epoch);

/// Clockwise rotation by 90 * (k mod 4) degrees.
ImageBuffer rotate90(const ImageBuffer& image, int k);
ImageBuffer flip_horizontal(const ImageBuffer& image);
ImageBuffer flip_vertical(const ImageBuffer& image);
/// Integer translation; uncovered pixels replicate the nearest edge.
ImageBuffer shift(const ImageBuffer& image, int dx, int dy);
/// Scale about the centre (>1 zooms in), bilinear, edge replication.
ImageBuffer zoom(const ImageBuffer& image, double scale);
ImageBuffer adjust_brightness(const ImageBuffer& image, int delta);

/// Per-sample stochastic pipeline in fixed order: flips, rotate90, shift, zoom,
/// brightness, blur/sharpen. Output dims equal input dims; on non-square
/// images rotation is limited to 0 or 180 degrees.
ImageBuffer apply_spatial(const ImageBuffer& image, const AugmentSpec& spec, Rng& rng);

/// Draws from Beta(alpha, alpha) via two gamma variates.
double sample_beta(double alpha, Rng& rng);

}  // namespace histo
