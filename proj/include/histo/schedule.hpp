#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "histo/error.hpp"

namespace histo {

/// Cosine annealing from base_lr at step 0 to eta_min at total_steps.
inline double cosine_lr(std::int64_t step, std::int64_t total_steps, double base_lr, double eta_min) {
  if (total_steps <= 0) throw ConfigError("cosine_lr: total_steps must be positive");
  if (step < 0 || step > total_steps) throw ConfigError("cosine_lr: step outside [0, total_steps]");
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return eta_min + (base_lr - eta_min) * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

}  // namespace histo
