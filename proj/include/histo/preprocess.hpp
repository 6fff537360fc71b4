#pragma once

#include <array>
#include <optional>
#include <string>

#include "histo/image.hpp"

namespace histo {

/// (height, width) in pixels.
struct Dims {
  int height = 0;
  int width = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(Dims d);  // "(h,w)"

inline constexpr double kDefaultBackgroundThreshold = 240.0;
inline constexpr Rgb kNeutralGray{128, 128, 128};

/// Channel-wise mean and standard deviation in CIE L*a*b*.
struct StainStats {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};

enum class StainMethod { none, reference_based };

struct PreprocessSpec {
  std::optional<Dims> target_dims;
  bool gray_noise = true;
  double luminance_threshold = kDefaultBackgroundThreshold;
  StainMethod stain = StainMethod::none;
  std::optional<StainStats> stain_reference;
};

/// Bilinear rescale to exactly `target`; aspect ratio is not preserved.
ImageBuffer resize(const ImageBuffer& image, Dims target);

/// Pixels brighter than the threshold become neutral gray.
ImageBuffer gray_out_noise(const ImageBuffer& image, double luminance_threshold = kDefaultBackgroundThreshold);

StainStats compute_stain_stats(const ImageBuffer& image);

/// Reinhard colour transfer: per-channel (x - mu_src) / sd_src * sd_ref + mu_ref in
/// L*a*b*. A source channel with zero spread maps to the reference mean.
/// Throws ConfigError if any reference channel has zero spread.
ImageBuffer stain_normalize(const ImageBuffer& image, const StainStats& reference);

/// resize, gray-out, then stain normalisation, as enabled in `spec`.
ImageBuffer apply_preprocess(const ImageBuffer& image, const PreprocessSpec& spec);

}  // namespace histo
