#include "histo/metrics.hpp"

#include <stdexcept>
#include <string>

namespace histo {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : counts_(num_classes, std::vector<std::int64_t>(num_classes, 0)) {
  if (num_classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::vector<std::int64_t>> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw std::invalid_argument("confusion matrix needs at least one class");
  for (const auto& row : counts_) {
    if (row.size() != counts_.size()) throw std::invalid_argument("confusion matrix must be square");
    for (auto v : row) {
      if (v < 0) throw std::invalid_argument("confusion matrix entries must be nonnegative");
    }
  }
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred, std::int64_t n) { counts_.at(truth).at(pred) += n; }

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts_) {
    for (auto v : row) t += v;
  }
  return t;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::int64_t t = 0;
  for (auto v : counts_[c]) t += v;
  return t;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::int64_t t = 0;
  for (const auto& row : counts_) t += row[c];
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) t += counts_[i][i];
  return t;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("confusion: label sequences differ in length (" + std::to_string(truth.size()) +
                                " vs " + std::to_string(predicted.size()) + ")");
  }
  ConfusionMatrix cm(num_classes);
  const int k = static_cast<int>(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      throw std::invalid_argument("confusion: invalid class index at position " + std::to_string(i));
    }
    cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("compute_metrics: confusion matrix is all zero");
  const std::size_t k = cm.num_classes();
  const double n = static_cast<double>(total);

  MetricsReport rep;
  rep.total = total;
  rep.accuracy = static_cast<double>(cm.trace()) / n;
  rep.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = rep.per_class[c];
    const auto tp = static_cast<double>(cm(c, c));
    const auto row = cm.row_sum(c);
    const auto col = cm.col_sum(c);
    m.support = row;
    if (col > 0) {
      m.precision = tp / static_cast<double>(col);
      m.false_positive_rate = (static_cast<double>(col) - tp) / static_cast<double>(col);
    } else {
      m.precision_undefined = true;
    }
    if (row > 0) {
      m.recall = tp / static_cast<double>(row);
      m.false_negative_rate = (static_cast<double>(row) - tp) / static_cast<double>(row);
    } else {
      m.recall_undefined = true;
    }
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      m.f1_undefined = true;
    }
    const double share = static_cast<double>(row) / n;
    rep.weighted_f1 += share * m.f1;
    rep.weighted_recall += share * m.recall;
    rep.sensitivity += m.recall;
    rep.macro_f1 += m.f1;
  }
  rep.sensitivity /= static_cast<double>(k);
  rep.macro_f1 /= static_cast<double>(k);
  return rep;
}

}  // namespace histo
