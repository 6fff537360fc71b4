#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "histo/labels.hpp"

namespace histo {

/// counts[true][pred], square, class order as ClassCode.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = kNumClassCodes);
  ConfusionMatrix(std::vector<std::vector<std::int64_t>> counts);

  std::size_t num_classes() const { return counts_.size(); }
  std::int64_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth][pred]; }
  void add(std::size_t truth, std::size_t pred, std::int64_t n = 1);

  std::int64_t total() const;
  std::int64_t row_sum(std::size_t c) const;
  std::int64_t col_sum(std::size_t c) const;
  std::int64_t trace() const;
  const std::vector<std::vector<std::int64_t>>& counts() const { return counts_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::vector<std::int64_t>> counts_;
};

/// Labels are class indices in [0, num_classes). Throws std::invalid_argument
/// on length mismatch or out-of-range labels.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t num_classes = kNumClassCodes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  // Off-diagonal row share (missed) and column share (wrongly claimed).
  double false_negative_rate = 0.0;
  double false_positive_rate = 0.0;
  // Set when the corresponding denominator was zero and the value was defined as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricsReport {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double sensitivity = 0.0;  // macro-averaged recall
  double weighted_recall = 0.0;
  double macro_f1 = 0.0;
  std::int64_t total = 0;
  std::vector<ClassMetrics> per_class;
};

/// Throws std::invalid_argument on an all-zero matrix.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

}  // namespace histo
