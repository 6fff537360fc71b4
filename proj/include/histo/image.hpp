#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace histo {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB image, row-major, interleaved channels.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int height, int width, Rgb fill = {});
  ImageBuffer(int height, int width, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return height_ == 0 || width_ == 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  Rgb at(int y, int x) const {
    const auto* p = &data_[offset(y, x)];
    return {p[0], p[1], p[2]};
  }
  void set(int y, int x, Rgb c) {
    auto* p = &data_[offset(y, x)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  /// Copy of the rectangle [x, x+w) x [y, y+h); must lie inside the image.
  ImageBuffer crop(int x, int y, int w, int h) const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t offset(int y, int x) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Rec. 601 luma of an 8-bit RGB pixel.
inline double luminance(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

/// Decodes PNG/JPEG/TIFF; grayscale inputs are replicated to three channels.
/// Throws DataError on failure.
ImageBuffer load_image(const std::filesystem::path& path);
void save_png(const ImageBuffer& image, const std::filesystem::path& path);
/// Cheap check: a decoder recognises the file signature.
bool image_readable(const std::filesystem::path& path);

}  // namespace histo
