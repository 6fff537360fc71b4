#include "histo/augment.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"
#include "histo/error.hpp"

namespace histo {

AugmentSpec AugmentSpec::disabled() {
  AugmentSpec s;
  s.rotation90 = false;
  s.hflip_prob = 0.0;
  s.vflip_prob = 0.0;
  s.shift_fraction = 0.0;
  s.zoom_range = 0.0;
  s.brightness_delta = 0.0;
  s.blur_sharpen = false;
  s.cutmix_prob = 0.0;
  s.mixup_prob = 0.0;
  return s;
}

void AugmentSpec::validate() const {
  auto unit = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("augment.") + name + " must lie in [0,1]");
  };
  unit(hflip_prob, "hflip_prob");
  unit(vflip_prob, "vflip_prob");
  unit(shift_fraction, "shift_fraction");
  unit(zoom_range, "zoom_range");
  unit(brightness_delta, "brightness_delta");
  unit(cutmix_prob, "cutmix_prob");
  unit(mixup_prob, "mixup_prob");
  if (cutmix_prob + mixup_prob > 1.0 + 1e-12) {
    throw ConfigError("augment: cutmix_prob + mixup_prob must not exceed 1 (they are mutually exclusive)");
  }
  if (!(cutmix_alpha > 0.0)) throw ConfigError("augment.cutmix_alpha must be positive");
  if (!(mixup_alpha > 0.0)) throw ConfigError("augment.mixup_alpha must be positive");
}

Rng worker_rng(std::uint64_t global_seed, std::uint64_t worker_index, std::uint64_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(global_seed), static_cast<std::uint32_t>(global_seed >> 32),
                    static_cast<std::uint32_t>(worker_index), static_cast<std::uint32_t>(epoch),
                    static_cast<std::uint32_t>(epoch >> 32)};
  return Rng(seq);
}

ImageBuffer rotate90(const ImageBuffer& image, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return image;
  const int h = image.height(), w = image.width();
  ImageBuffer out = (k == 2) ? ImageBuffer(h, w) : ImageBuffer(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb px = image.at(y, x);
      switch (k) {
        case 1:  // clockwise: (y, x) -> (x, h - 1 - y)
          out.set(x, h - 1 - y, px);
          break;
        case 2:
          out.set(h - 1 - y, w - 1 - x, px);
          break;
        case 3:
          out.set(w - 1 - x, y, px);
          break;
      }
    }
  }
  return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& image) {
  ImageBuffer out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) out.set(y, image.width() - 1 - x, image.at(y, x));
  }
  return out;
}

ImageBuffer flip_vertical(const ImageBuffer& image) {
  ImageBuffer out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) out.set(image.height() - 1 - y, x, image.at(y, x));
  }
  return out;
}

ImageBuffer shift(const ImageBuffer& image, int dx, int dy) {
  if (dx == 0 && dy == 0) return image;
  ImageBuffer out = image;
  const int h = image.height(), w = image.width();
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(y - dy, 0, h - 1);
    for (int x = 0; x < w; ++x) out.set(y, x, image.at(sy, std::clamp(x - dx, 0, w - 1)));
  }
  return out;
}

ImageBuffer zoom(const ImageBuffer& image, double scale) {
  if (scale == 1.0) return image;
  const double cx = (image.width() - 1) / 2.0, cy = (image.height() - 1) / 2.0;
  cv::Mat m = (cv::Mat_<double>(2, 3) << scale, 0, (1 - scale) * cx, 0, scale, (1 - scale) * cy);
  cv::Mat out;
  cv::warpAffine(detail::as_mat(image), out, m, cv::Size(image.width(), image.height()), cv::INTER_LINEAR,
                 cv::BORDER_REPLICATE);
  return detail::from_mat(out);
}

ImageBuffer adjust_brightness(const ImageBuffer& image, int delta) {
  if (delta == 0) return image;
  ImageBuffer out = image;
  for (auto& v : out.data()) v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + delta, 0, 255));
  return out;
}

namespace {

ImageBuffer blur(const ImageBuffer& image) {
  cv::Mat out;
  cv::GaussianBlur(detail::as_mat(image), out, cv::Size(3, 3), 0, 0, cv::BORDER_REPLICATE);
  return detail::from_mat(out);
}

ImageBuffer sharpen(const ImageBuffer& image) {
  cv::Mat src = detail::as_mat(image), blurred, out;
  cv::GaussianBlur(src, blurred, cv::Size(3, 3), 0, 0, cv::BORDER_REPLICATE);
  cv::addWeighted(src, 1.5, blurred, -0.5, 0.0, out);  // unsharp mask, saturating
  return detail::from_mat(out);
}

bool bernoulli(double p, Rng& rng) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace

ImageBuffer apply_spatial(const ImageBuffer& image, const AugmentSpec& spec, Rng& rng) {
  ImageBuffer out = image;
  if (bernoulli(spec.hflip_prob, rng)) out = flip_horizontal(out);
  if (bernoulli(spec.vflip_prob, rng)) out = flip_vertical(out);
  if (spec.rotation90) {
    const bool square = out.height() == out.width();
    int k = std::uniform_int_distribution<int>(0, square ? 3 : 1)(rng);
    out = rotate90(out, square ? k : 2 * k);
  }
  if (spec.shift_fraction > 0.0) {
    const int max_dx = static_cast<int>(std::floor(spec.shift_fraction * out.width()));
    const int max_dy = static_cast<int>(std::floor(spec.shift_fraction * out.height()));
    const int dx = std::uniform_int_distribution<int>(-max_dx, max_dx)(rng);
    const int dy = std::uniform_int_distribution<int>(-max_dy, max_dy)(rng);
    out = shift(out, dx, dy);
  }
  if (spec.zoom_range > 0.0) {
    out = zoom(out, std::uniform_real_distribution<double>(1.0 - spec.zoom_range, 1.0 + spec.zoom_range)(rng));
  }
  if (spec.brightness_delta > 0.0) {
    const int max_delta = static_cast<int>(std::round(spec.brightness_delta * 255.0));
    out = adjust_brightness(out, std::uniform_int_distribution<int>(-max_delta, max_delta)(rng));
  }
  if (spec.blur_sharpen) {
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 1:
        out = blur(out);
        break;
      case 2:
        out = sharpen(out);
        break;
      default:
        break;
    }
  }
  return out;
}

double sample_beta(double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double a = gamma(rng);
  const double b = gamma(rng);
  if (a + b <= 0.0) return 0.5;
  return a / (a + b);
}

}  // namespace histo
