#pragma once

#include <torch/torch.h>

#include "histo/train_config.hpp"

namespace histo::nn {

// All losses take logits (B, K) and soft targets (B, K) whose rows sum to 1,
// and return the batch mean. Non-finite logits raise TrainingError.

torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& targets);
/// Targets replaced by (1 - s) * t + s / K.
torch::Tensor label_smoothing_ce(const torch::Tensor& logits, const torch::Tensor& targets, double smoothing);
/// -sum_c t_c (1 - p_c)^gamma log p_c.
torch::Tensor focal_loss(const torch::Tensor& logits, const torch::Tensor& targets, double gamma);

torch::Tensor compute_loss(const torch::Tensor& logits, const torch::Tensor& targets, const LossSpec& spec);

/// (B, K) one-hot rows for class indices.
torch::Tensor one_hot_targets(const torch::Tensor& labels, int64_t num_classes);

}  // namespace histo::nn
