#pragma once

// Reference computations for metrics and zoomed pixels, written from the
// definitions without the library code paths.

#include <cmath>
#include <cstdint>
#include <vector>

#include "histo/image.hpp"

namespace histo::test {

struct MetricsOracle {
  double accuracy, weighted_f1, macro_recall;
};

// Straight from label lists, no confusion matrix.
inline MetricsOracle brute_force_metrics(const std::vector<int>& t, const std::vector<int>& p, int k) {
  MetricsOracle o{0, 0, 0};
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) o.accuracy += t[i] == p[i];
  o.accuracy /= n;
  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tp += t[i] == c && p[i] == c;
      fp += t[i] != c && p[i] == c;
      fn += t[i] == c && p[i] != c;
      support += t[i] == c;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    o.weighted_f1 += support / n * f1;
    o.macro_recall += rec / k;
  }
  return o;
}

// Box-average oracle for a zoomed pixel.
inline Rgb block_mean(const ImageBuffer& img, int zx, int zy, int factor) {
  double s[3] = {0, 0, 0};
  for (int y = zy * factor; y < (zy + 1) * factor; ++y) {
    for (int x = zx * factor; x < (zx + 1) * factor; ++x) {
      const Rgb p = img.at(y, x);
      s[0] += p.r;
      s[1] += p.g;
      s[2] += p.b;
    }
  }
  const double n = double(factor) * factor;
  return {static_cast<std::uint8_t>(std::lround(s[0] / n)), static_cast<std::uint8_t>(std::lround(s[1] / n)),
          static_cast<std::uint8_t>(std::lround(s[2] / n))};
}

}  // namespace histo::test
