#pragma once

// Internal helpers for moving between ImageBuffer and cv::Mat (RGB order).

#include <opencv2/core.hpp>

#include "histo/image.hpp"

namespace histo::detail {

/// Non-owning CV_8UC3 view; valid while `image` lives and is unmodified.
inline cv::Mat as_mat(const ImageBuffer& image) {
  return cv::Mat(image.height(), image.width(), CV_8UC3,
                 const_cast<std::uint8_t*>(image.data().data()));
}

inline ImageBuffer from_mat(const cv::Mat& mat) {
  CV_Assert(mat.type() == CV_8UC3);
  cv::Mat cont = mat.isContinuous() ? mat : mat.clone();
  std::vector<std::uint8_t> data(cont.data, cont.data + cont.total() * 3);
  return ImageBuffer(cont.rows, cont.cols, std::move(data));
}

}  // namespace histo::detail
