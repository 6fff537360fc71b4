#include "histo/batch_mix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace histo {

SoftLabel SoftLabel::one_hot(std::size_t cls, std::size_t num_classes) {
  if (cls >= num_classes) throw std::invalid_argument("SoftLabel::one_hot: class out of range");
  SoftLabel s;
  s.weights.assign(num_classes, 0.0);
  s.weights[cls] = 1.0;
  return s;
}

double SoftLabel::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

bool SoftLabel::valid(double tol) const {
  for (double w : weights) {
    if (!(w >= 0.0)) return false;
  }
  return std::abs(sum() - 1.0) <= tol;
}

Rect cutmix_rect(Dims d, double lambda, int cy, int cx) {
  const double cut = std::sqrt(std::clamp(1.0 - lambda, 0.0, 1.0));
  const int ch = static_cast<int>(std::lround(d.height * cut));
  const int cw = static_cast<int>(std::lround(d.width * cut));
  const int y0 = std::clamp(cy - ch / 2, 0, d.height), y1 = std::clamp(cy + ch - ch / 2, 0, d.height);
  const int x0 = std::clamp(cx - cw / 2, 0, d.width), x1 = std::clamp(cx + cw - cw / 2, 0, d.width);
  return {x0, y0, x1 - x0, y1 - y0};
}

MixPlan mixup_plan(std::vector<std::size_t> partner, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("mixup: lambda must lie in [0,1]");
  MixPlan p;
  p.kind = MixKind::mixup;
  p.partner = std::move(partner);
  p.lambda = lambda;
  return p;
}

MixPlan cutmix_plan(std::vector<std::size_t> partner, Rect rect, Dims d) {
  // Clip, then derive the label weight from the pixels actually replaced.
  const int x0 = std::clamp(rect.x, 0, d.width), x1 = std::clamp(rect.x + rect.w, 0, d.width);
  const int y0 = std::clamp(rect.y, 0, d.height), y1 = std::clamp(rect.y + rect.h, 0, d.height);
  MixPlan p;
  p.kind = MixKind::cutmix;
  p.partner = std::move(partner);
  p.rect = {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
  const double area = static_cast<double>(p.rect.w) * p.rect.h;
  p.lambda = 1.0 - area / (static_cast<double>(d.height) * d.width);
  return p;
}

MixPlan plan_batch_mix(std::size_t n, Dims d, const AugmentSpec& spec, Rng& rng, ValidationReport* report) {
  MixPlan none;
  if (spec.cutmix_prob <= 0.0 && spec.mixup_prob <= 0.0) return none;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  MixKind kind = MixKind::none;
  if (u < spec.cutmix_prob) {
    kind = MixKind::cutmix;
  } else if (u < spec.cutmix_prob + spec.mixup_prob) {
    kind = MixKind::mixup;
  }
  if (kind == MixKind::none) return none;
  if (n < 2) {
    if (report) report->warn("batch_mix", "batch of one left unmixed");
    return none;
  }
  std::vector<std::size_t> partner(n);
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  std::shuffle(partner.begin(), partner.end(), rng);
  if (kind == MixKind::mixup) return mixup_plan(std::move(partner), sample_beta(spec.mixup_alpha, rng));
  const double lambda = sample_beta(spec.cutmix_alpha, rng);
  const int cy = std::uniform_int_distribution<int>(0, d.height - 1)(rng);
  const int cx = std::uniform_int_distribution<int>(0, d.width - 1)(rng);
  return cutmix_plan(std::move(partner), cutmix_rect(d, lambda, cy, cx), d);
}

std::vector<SoftLabel> mix_labels(const std::vector<SoftLabel>& labels, const MixPlan& plan) {
  if (plan.kind == MixKind::none) return labels;
  if (plan.partner.size() != labels.size()) throw std::invalid_argument("mix_labels: partner count mismatch");
  std::vector<SoftLabel> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& a = labels[i].weights;
    const auto& b = labels[plan.partner[i]].weights;
    if (a.size() != b.size()) throw std::invalid_argument("mix_labels: label length mismatch");
    out[i].weights.resize(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) out[i].weights[c] = plan.lambda * a[c] + (1.0 - plan.lambda) * b[c];
  }
  return out;
}

std::vector<ImageBuffer> mix_images(const std::vector<ImageBuffer>& images, const MixPlan& plan) {
  if (plan.kind == MixKind::none) return images;
  if (plan.partner.size() != images.size()) throw std::invalid_argument("mix_images: partner count mismatch");
  std::vector<ImageBuffer> out = images;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageBuffer& a = images[i];
    const ImageBuffer& b = images[plan.partner[i]];
    if (a.height() != b.height() || a.width() != b.width()) {
      throw std::invalid_argument("mix_images: images must share dims");
    }
    if (plan.kind == MixKind::mixup) {
      auto dst = out[i].data();
      const auto pa = a.data(), pb = b.data();
      for (std::size_t k = 0; k < dst.size(); ++k) {
        dst[k] = static_cast<std::uint8_t>(std::lround(plan.lambda * pa[k] + (1.0 - plan.lambda) * pb[k]));
      }
    } else {
      const Rect& r = plan.rect;
      for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) out[i].set(y, x, b.at(y, x));
      }
    }
  }
  return out;
}

}  // namespace histo
