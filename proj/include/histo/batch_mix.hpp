#pragma once

#include <cstddef>
#include <vector>

#include "histo/augment.hpp"
#include "histo/error.hpp"
#include "histo/tiling.hpp"

namespace histo {

/// Class distribution for one sample; nonnegative and summing to 1.
struct SoftLabel {
  std::vector<double> weights;

  static SoftLabel one_hot(std::size_t cls, std::size_t num_classes);
  double sum() const;
  bool valid(double tol = 1e-6) const;
};

enum class MixKind { none, mixup, cutmix };

/// One batch-level mixing decision. Sample i is mixed with partner[i].
/// For mixup the pixel weight of the sample itself is `lambda`; for cutmix
/// `rect` is pasted from the partner and `lambda` is the realised fraction of
/// pixels kept (1 - rect area / image area, after clipping).
struct MixPlan {
  MixKind kind = MixKind::none;
  std::vector<std::size_t> partner;
  double lambda = 1.0;
  Rect rect;
};

/// Draws none / cutmix / mixup with probabilities (1 - pc - pm, pc, pm), a
/// partner permutation and lambda ~ Beta(alpha, alpha). A batch of one is
/// never mixed and records a warning when a mix was drawn.
MixPlan plan_batch_mix(std::size_t batch_size, Dims image_dims, const AugmentSpec& spec, Rng& rng,
                       ValidationReport* report = nullptr);

/// Cutmix rectangle for a kept fraction `lambda`: side sqrt(1 - lambda) of each
/// dimension, centred at (cy, cx) and clipped to the image.
Rect cutmix_rect(Dims image_dims, double lambda, int cy, int cx);

/// Plans with explicit parameters, for callers that choose lambda or the box.
MixPlan mixup_plan(std::vector<std::size_t> partner, double lambda);
MixPlan cutmix_plan(std::vector<std::size_t> partner, Rect rect, Dims image_dims);

std::vector<SoftLabel> mix_labels(const std::vector<SoftLabel>& labels, const MixPlan& plan);

/// Pixel-space application on 8-bit images (mixup rounds to nearest).
std::vector<ImageBuffer> mix_images(const std::vector<ImageBuffer>& images, const MixPlan& plan);

}  // namespace histo
