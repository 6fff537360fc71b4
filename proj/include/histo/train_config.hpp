#pragma once

#include <cstdint>
#include <string_view>

#include "histo/augment.hpp"
#include "histo/sampling.hpp"

namespace histo {

enum class LossKind { cross_entropy, label_smoothing_ce, focal };

std::string_view loss_name(LossKind k);
LossKind parse_loss(std::string_view text);
/// "CrossEntropy", "LabelSmoothing", "Focal Loss".
std::string_view loss_display_name(LossKind k);

struct LossSpec {
  LossKind kind = LossKind::cross_entropy;
  double smoothing = 0.35;
  double gamma = 2.0;

  void validate() const;
};

struct TrainConfig {
  LossSpec loss;
  double base_lr = 1e-3;
  double eta_min = 1e-6;
  double weight_decay = 1e-4;
  int epochs = 30;
  BatchPlan sampler;  // batch size, strategy, seed
  int eval_batch_size = 16;
  AugmentSpec augment;
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = true;

  void validate() const;
};

}  // namespace histo
