#include "histo/sampling.hpp"

#include <algorithm>
#include <memory>

#include "histo/error.hpp"

namespace histo {

std::string_view strategy_name(SamplerStrategy s) {
  switch (s) {
    case SamplerStrategy::none:
      return "none";
    case SamplerStrategy::weighted:
      return "weighted";
    case SamplerStrategy::batch_balanced:
      return "batch_balanced";
  }
  return "";
}

SamplerStrategy parse_strategy(std::string_view text) {
  if (text == "none") return SamplerStrategy::none;
  if (text == "weighted") return SamplerStrategy::weighted;
  if (text == "batch_balanced") return SamplerStrategy::batch_balanced;
  throw ConfigError("unknown sampler strategy: '" + std::string(text) +
                    "' (expected none, weighted or batch_balanced)");
}

ClassWeights class_weights(const ClassCounts& counts) {
  if (counts.empty()) throw ConfigError("class_weights: no classes");
  double total = 0.0;
  for (const auto& [c, n] : counts) {
    if (n <= 0) throw ConfigError("class_weights: class " + std::string(code_name(c)) + " has zero count");
    total += 1.0 / static_cast<double>(n);
  }
  ClassWeights w;
  for (const auto& [c, n] : counts) w[c] = (1.0 / static_cast<double>(n)) / total;
  return w;
}

namespace {

std::vector<std::size_t> train_indices(const DatasetManifest& manifest) {
  auto idx = manifest.indices(Split::train);
  if (idx.empty()) throw ConfigError("sampler: train split is empty");
  return idx;
}

void check_batch_size(std::size_t b) {
  if (b == 0) throw ConfigError("sampler: batch_size must be positive");
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

SequentialShuffleSampler::SequentialShuffleSampler(const DatasetManifest& manifest, const BatchPlan& plan)
    : order_(train_indices(manifest)), batch_size_(plan.batch_size), rng_(plan.seed) {
  check_batch_size(batch_size_);
  std::shuffle(order_.begin(), order_.end(), rng_);
}

IndexBatch SequentialShuffleSampler::next_batch() {
  if (cursor_ >= order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  IndexBatch batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                   order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

std::size_t SequentialShuffleSampler::batches_per_epoch() const { return ceil_div(order_.size(), batch_size_); }

WeightedSampler::WeightedSampler(const DatasetManifest& manifest, const BatchPlan& plan)
    : candidates_(train_indices(manifest)),
      weights_(class_weights(manifest.class_counts(Split::train))),
      batch_size_(plan.batch_size),
      rng_(plan.seed) {
  check_batch_size(batch_size_);
  std::vector<double> per_sample;
  per_sample.reserve(candidates_.size());
  for (auto i : candidates_) per_sample.push_back(weights_.at(manifest.records()[i].label));
  dist_ = std::discrete_distribution<std::size_t>(per_sample.begin(), per_sample.end());
}

std::size_t WeightedSampler::next() { return candidates_[dist_(rng_)]; }

IndexBatch WeightedSampler::next_batch() {
  IndexBatch batch(batch_size_);
  for (auto& i : batch) i = next();
  return batch;
}

std::size_t WeightedSampler::batches_per_epoch() const { return ceil_div(candidates_.size(), batch_size_); }

BalancedBatchSampler::BalancedBatchSampler(const DatasetManifest& manifest, const BatchPlan& plan)
    : batch_size_(plan.batch_size), rng_(plan.seed) {
  check_batch_size(batch_size_);
  auto idx = train_indices(manifest);
  train_size_ = idx.size();
  std::map<ClassCode, std::vector<std::size_t>> by_class;
  for (auto i : idx) by_class[manifest.records()[i].label].push_back(i);
  for (auto& [c, items] : by_class) {
    classes_.push_back(c);
    Pool pool;
    pool.items = std::move(items);
    std::shuffle(pool.items.begin(), pool.items.end(), rng_);
    pools_.push_back(std::move(pool));
  }
  if (batch_size_ % classes_.size() != 0) {
    throw ConfigError("batch_balanced sampler: batch_size " + std::to_string(batch_size_) +
                      " is not divisible by the number of classes (" + std::to_string(classes_.size()) + ")");
  }
  per_class_ = batch_size_ / classes_.size();
}

IndexBatch BalancedBatchSampler::next_batch() {
  IndexBatch batch;
  batch.reserve(batch_size_);
  for (auto& pool : pools_) {
    for (std::size_t k = 0; k < per_class_; ++k) {
      if (pool.cursor == pool.items.size()) {
        std::shuffle(pool.items.begin(), pool.items.end(), rng_);
        pool.cursor = 0;
      }
      batch.push_back(pool.items[pool.cursor++]);
    }
  }
  std::shuffle(batch.begin(), batch.end(), rng_);
  return batch;
}

std::size_t BalancedBatchSampler::batches_per_epoch() const { return ceil_div(train_size_, batch_size_); }

std::unique_ptr<BatchSampler> make_sampler(const DatasetManifest& manifest, const BatchPlan& plan) {
  switch (plan.strategy) {
    case SamplerStrategy::none:
      return std::make_unique<SequentialShuffleSampler>(manifest, plan);
    case SamplerStrategy::weighted:
      return std::make_unique<WeightedSampler>(manifest, plan);
    case SamplerStrategy::batch_balanced:
      return std::make_unique<BalancedBatchSampler>(manifest, plan);
  }
  throw ConfigError("unknown sampler strategy");
}

}  // namespace histo
