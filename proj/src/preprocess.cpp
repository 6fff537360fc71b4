#include "histo/preprocess.hpp"

#include <cmath>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"
#include "histo/error.hpp"

namespace histo {

std::string to_string(Dims d) {
  return "(" + std::to_string(d.height) + "," + std::to_string(d.width) + ")";
}

ImageBuffer resize(const ImageBuffer& image, Dims target) {
  if (target.height < 1 || target.width < 1) throw ConfigError("resize: target dimensions must be positive");
  if (target.height == image.height() && target.width == image.width()) return image;
  cv::Mat out;
  cv::resize(detail::as_mat(image), out, cv::Size(target.width, target.height), 0, 0, cv::INTER_LINEAR);
  return detail::from_mat(out);
}

ImageBuffer gray_out_noise(const ImageBuffer& image, double luminance_threshold) {
  ImageBuffer out = image;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (luminance(out.at(y, x)) > luminance_threshold) out.set(y, x, kNeutralGray);
    }
  }
  return out;
}

namespace {

cv::Mat to_lab(const ImageBuffer& image) {
  cv::Mat rgb32;
  detail::as_mat(image).convertTo(rgb32, CV_32FC3, 1.0 / 255.0);
  cv::Mat lab;
  cv::cvtColor(rgb32, lab, cv::COLOR_RGB2Lab);
  return lab;
}

}  // namespace

StainStats compute_stain_stats(const ImageBuffer& image) {
  cv::Scalar mean, stddev;
  cv::meanStdDev(to_lab(image), mean, stddev);
  StainStats s;
  for (int c = 0; c < 3; ++c) {
    s.mean[c] = mean[c];
    s.stddev[c] = stddev[c];
  }
  return s;
}

ImageBuffer stain_normalize(const ImageBuffer& image, const StainStats& reference) {
  constexpr double kEps = 1e-6;
  for (double sd : reference.stddev) {
    if (!(sd > kEps)) throw ConfigError("stain_normalize: reference statistics have a zero-variance channel");
  }
  cv::Mat lab = to_lab(image);
  const StainStats src = compute_stain_stats(image);
  std::array<double, 3> scale{}, shift{};
  for (int c = 0; c < 3; ++c) {
    scale[c] = src.stddev[c] > kEps ? reference.stddev[c] / src.stddev[c] : 0.0;
    shift[c] = reference.mean[c] - scale[c] * src.mean[c];
  }
  lab.forEach<cv::Vec3f>([&](cv::Vec3f& px, const int*) {
    for (int c = 0; c < 3; ++c) px[c] = static_cast<float>(scale[c] * px[c] + shift[c]);
  });
  cv::Mat rgb32;
  cv::cvtColor(lab, rgb32, cv::COLOR_Lab2RGB);
  cv::Mat rgb8;
  rgb32.convertTo(rgb8, CV_8UC3, 255.0);  // saturating, rounds to nearest
  return detail::from_mat(rgb8);
}

ImageBuffer apply_preprocess(const ImageBuffer& image, const PreprocessSpec& spec) {
  ImageBuffer out = spec.target_dims ? resize(image, *spec.target_dims) : image;
  if (spec.gray_noise) out = gray_out_noise(out, spec.luminance_threshold);
  if (spec.stain == StainMethod::reference_based) {
    if (!spec.stain_reference) throw ConfigError("stain normalisation enabled without reference statistics");
    out = stain_normalize(out, *spec.stain_reference);
  }
  return out;
}

}  // namespace histo
