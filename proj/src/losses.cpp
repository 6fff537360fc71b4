#include "histo/nn/losses.hpp"

#include <sstream>

#include "histo/error.hpp"

namespace histo::nn {

namespace {

void check_inputs(const torch::Tensor& logits, const torch::Tensor& targets) {
  if (logits.dim() != 2 || targets.sizes() != logits.sizes()) {
    std::ostringstream msg;
    msg << "loss: expected logits and targets of equal shape (B, K), got " << logits.sizes() << " and "
        << targets.sizes();
    throw ConfigError(msg.str());
  }
  const auto finite_rows = torch::isfinite(logits).all(1);
  if (!finite_rows.all().item<bool>()) {
    const auto bad = torch::nonzero(finite_rows.logical_not()).flatten();
    std::ostringstream msg;
    msg << "loss: non-finite logits in " << bad.numel() << " of " << logits.size(0) << " rows (first bad row "
        << bad[0].item<int64_t>() << ")";
    throw TrainingError(msg.str());
  }
}

}  // namespace

torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& targets) {
  check_inputs(logits, targets);
  return -(targets * torch::log_softmax(logits, 1)).sum(1).mean();
}

torch::Tensor label_smoothing_ce(const torch::Tensor& logits, const torch::Tensor& targets, double smoothing) {
  if (!(smoothing >= 0.0 && smoothing <= 1.0)) throw ConfigError("label smoothing must lie in [0,1]");
  const double k = static_cast<double>(logits.size(-1));
  return cross_entropy(logits, targets * (1.0 - smoothing) + smoothing / k);
}

torch::Tensor focal_loss(const torch::Tensor& logits, const torch::Tensor& targets, double gamma) {
  if (!(gamma >= 0.0)) throw ConfigError("focal gamma must be nonnegative");
  check_inputs(logits, targets);
  const auto log_p = torch::log_softmax(logits, 1);
  if (gamma == 0.0) return -(targets * log_p).sum(1).mean();
  // clamp keeps pow's gradient finite at p == 1.
  const auto modulator = torch::pow((1.0 - log_p.exp()).clamp_min(0.0), gamma);
  return -(targets * modulator * log_p).sum(1).mean();
}

torch::Tensor compute_loss(const torch::Tensor& logits, const torch::Tensor& targets, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::cross_entropy:
      return cross_entropy(logits, targets);
    case LossKind::label_smoothing_ce:
      return label_smoothing_ce(logits, targets, spec.smoothing);
    case LossKind::focal:
      return focal_loss(logits, targets, spec.gamma);
  }
  throw ConfigError("unknown loss kind");
}

torch::Tensor one_hot_targets(const torch::Tensor& labels, int64_t num_classes) {
  return torch::one_hot(labels.to(torch::kLong), num_classes).to(torch::kFloat);
}

}  // namespace histo::nn
