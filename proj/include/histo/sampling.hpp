#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "histo/manifest.hpp"

namespace histo {

enum class SamplerStrategy { none, weighted, batch_balanced };

std::string_view strategy_name(SamplerStrategy s);
SamplerStrategy parse_strategy(std::string_view text);

struct BatchPlan {
  std::size_t batch_size = 28;
  SamplerStrategy strategy = SamplerStrategy::batch_balanced;
  std::uint64_t seed = 0;
};

/// Normalised inverse-frequency weights: w_c = (1/n_c) / sum_k (1/n_k).
using ClassWeights = std::map<ClassCode, double>;
ClassWeights class_weights(const ClassCounts& counts);

/// Indices into DatasetManifest::records(); always from the train split.
using IndexBatch = std::vector<std::size_t>;

/// Common interface so the training loop can switch strategies.
class BatchSampler {
 public:
  virtual ~BatchSampler() = default;
  virtual IndexBatch next_batch() = 0;
  virtual std::size_t batches_per_epoch() const = 0;
};

/// Shuffled pass over the train split per epoch; the final batch may be short.
class SequentialShuffleSampler : public BatchSampler {
 public:
  SequentialShuffleSampler(const DatasetManifest& manifest, const BatchPlan& plan);
  IndexBatch next_batch() override;
  std::size_t batches_per_epoch() const override;

 private:
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

/// I.i.d. draws with probability proportional to the sample's class weight.
class WeightedSampler : public BatchSampler {
 public:
  WeightedSampler(const DatasetManifest& manifest, const BatchPlan& plan);
  std::size_t next();
  IndexBatch next_batch() override;
  /// ceil(N / batch_size)
  std::size_t batches_per_epoch() const override;
  const ClassWeights& weights() const { return weights_; }

 private:
  std::vector<std::size_t> candidates_;
  ClassWeights weights_;
  std::discrete_distribution<std::size_t> dist_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

/// Every batch holds batch_size / K samples of each of the K classes present
/// in the train split, drawn from per-class pools that reshuffle on
/// exhaustion.
class BalancedBatchSampler : public BatchSampler {
 public:
  BalancedBatchSampler(const DatasetManifest& manifest, const BatchPlan& plan);
  IndexBatch next_batch() override;
  std::size_t batches_per_epoch() const override;
  const std::vector<ClassCode>& classes() const { return classes_; }

 private:
  struct Pool {
    std::vector<std::size_t> items;
    std::size_t cursor = 0;
  };
  std::vector<ClassCode> classes_;
  std::vector<Pool> pools_;
  std::size_t per_class_;
  std::size_t train_size_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

std::unique_ptr<BatchSampler> make_sampler(const DatasetManifest& manifest, const BatchPlan& plan);

}  // namespace histo
