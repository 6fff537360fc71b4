#include "histo/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <stdexcept>

#include "cv_bridge.hpp"
#include "histo/error.hpp"

namespace histo {

ImageBuffer::ImageBuffer(int height, int width, Rgb fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw std::invalid_argument("image dimensions must be positive");
  data_.resize(pixel_count() * kChannels);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data_[3 * i] = fill.r;
    data_[3 * i + 1] = fill.g;
    data_[3 * i + 2] = fill.b;
  }
}

ImageBuffer::ImageBuffer(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) throw std::invalid_argument("image dimensions must be positive");
  if (data_.size() != pixel_count() * kChannels) {
    throw std::invalid_argument("image data size does not match dimensions");
  }
}

ImageBuffer ImageBuffer::crop(int x, int y, int w, int h) const {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > width_ || y + h > height_) {
    throw std::out_of_range("crop rectangle outside image bounds");
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h * kChannels);
  for (int row = 0; row < h; ++row) {
    const auto* src = &data_[offset(y + row, x)];
    std::copy(src, src + static_cast<std::size_t>(w) * kChannels,
              out.begin() + static_cast<std::ptrdiff_t>(row) * w * kChannels);
  }
  return ImageBuffer(h, w, std::move(out));
}

ImageBuffer load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot decode image: " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return detail::from_mat(rgb);
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  cv::Mat bgr;
  cv::cvtColor(detail::as_mat(image), bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write image: " + path.string());
}

bool image_readable(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return false;
  try {
    return cv::haveImageReader(path.string());
  } catch (const cv::Exception&) {
    return false;
  }
}

}  // namespace histo
