#include <cmath>
#include <set>

#include "doctest.h"
#include "histo/sampling.hpp"
#include "test_support.hpp"

using namespace histo;
using histo::test::bracs_table_counts;
using histo::test::manifest_with_counts;

TEST_CASE("class_weights: inverse frequency, normalised") {
  SUBCASE("equal counts give uniform weights") {
    ClassCounts c;
    for (auto k : kAllClasses) c[k] = 100;
    for (const auto& [k, w] : class_weights(c)) CHECK(w == doctest::Approx(1.0 / 7).epsilon(1e-12));
  }
  SUBCASE("two classes") {
    auto w = class_weights({{ClassCode::N, 10}, {ClassCode::PB, 30}});
    CHECK(w.at(ClassCode::N) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(w.at(ClassCode::PB) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("BRACS counts") {
    auto w = class_weights(bracs_table_counts());
    CHECK(w.at(ClassCode::N) / w.at(ClassCode::PB) == doctest::Approx(836.0 / 484.0).epsilon(1e-12));
    double sum = 0;
    for (const auto& [k, v] : w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero count is fatal") {
    CHECK_THROWS_AS(class_weights({{ClassCode::N, 10}, {ClassCode::PB, 0}}), ConfigError);
  }
}

TEST_CASE("WeightedSampler: empirical class frequencies are balanced") {
  for (bool imbalanced : {false, true}) {
    CAPTURE(imbalanced);
    ClassCounts counts = bracs_table_counts();
    if (!imbalanced) {
      for (auto& [k, n] : counts) n = 300;
    }
    const auto m = manifest_with_counts(counts);
    WeightedSampler s(m, {28, SamplerStrategy::weighted, 17});
    std::map<ClassCode, int> hits;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++hits[m.records()[s.next()].label];
    for (auto k : kAllClasses) CHECK(std::abs(hits[k] / double(draws) - 1.0 / 7) < 0.02);
  }
}

TEST_CASE("WeightedSampler: seeded prefix determinism and train-only draws") {
  auto m = custom_split(manifest_with_counts(bracs_table_counts()), {0.8, 0.1, 0.1}, 3);
  BatchPlan plan{28, SamplerStrategy::weighted, 5};
  WeightedSampler a(m, plan), b(m, plan);
  for (int i = 0; i < 500; ++i) {
    const auto ia = a.next();
    REQUIRE(ia == b.next());
    REQUIRE(m.records()[ia].split == Split::train);
  }
  CHECK(a.batches_per_epoch() == (m.split_size(Split::train) + 27) / 28);
}

TEST_CASE("BalancedBatchSampler: equal per-class share in every batch") {
  const auto m = manifest_with_counts(bracs_table_counts());
  for (std::size_t bs : {14u, 28u}) {
    BalancedBatchSampler s(m, {bs, SamplerStrategy::batch_balanced, 1});
    for (int b = 0; b < 50; ++b) {
      auto batch = s.next_batch();
      REQUIRE(batch.size() == bs);
      std::map<ClassCode, std::size_t> per;
      for (auto i : batch) ++per[m.records()[i].label];
      REQUIRE(per.size() == 7);
      for (const auto& [k, n] : per) REQUIRE(n == bs / 7);
    }
  }
  CHECK_THROWS_AS(BalancedBatchSampler(m, {13, SamplerStrategy::batch_balanced, 1}), ConfigError);
}

TEST_CASE("BalancedBatchSampler: pools are exhausted before any repeat") {
  const auto m = manifest_with_counts(bracs_table_counts());
  BalancedBatchSampler s(m, {28, SamplerStrategy::batch_balanced, 2});
  // 209 batches draw 836 PB samples: exactly one pass through the PB pool.
  std::set<std::size_t> pb;
  std::map<std::size_t, int> n_uses;
  for (int b = 0; b < 209; ++b) {
    for (auto i : s.next_batch()) {
      const auto label = m.records()[i].label;
      if (label == ClassCode::PB) CHECK(pb.insert(i).second);
      if (label == ClassCode::N) ++n_uses[i];
    }
  }
  CHECK(pb.size() == 836);
  // 836 N draws over 484 N samples: every sample once or twice.
  CHECK(n_uses.size() == 484);
  for (const auto& [i, n] : n_uses) CHECK((n == 1 || n == 2));
}

TEST_CASE("BalancedBatchSampler: classes follow the train split") {
  const auto m = manifest_with_counts({{ClassCode::N, 5}, {ClassCode::IC, 9}, {ClassCode::FEA, 3}});
  BalancedBatchSampler s(m, {6, SamplerStrategy::batch_balanced, 0});
  CHECK(s.classes().size() == 3);
  CHECK(s.next_batch().size() == 6);
}

TEST_CASE("SequentialShuffleSampler: one epoch covers the train split once") {
  const auto m = manifest_with_counts({{ClassCode::N, 30}, {ClassCode::PB, 23}});
  SequentialShuffleSampler s(m, {10, SamplerStrategy::none, 4});
  CHECK(s.batches_per_epoch() == 6);
  std::multiset<std::size_t> seen;
  for (std::size_t b = 0; b < s.batches_per_epoch(); ++b) {
    for (auto i : s.next_batch()) seen.insert(i);
  }
  CHECK(seen.size() == 53);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 53);
}

TEST_CASE("make_sampler dispatches on strategy") {
  const auto m = manifest_with_counts({{ClassCode::N, 7}, {ClassCode::PB, 7}});
  CHECK(dynamic_cast<WeightedSampler*>(make_sampler(m, {4, SamplerStrategy::weighted, 0}).get()));
  CHECK(dynamic_cast<BalancedBatchSampler*>(make_sampler(m, {4, SamplerStrategy::batch_balanced, 0}).get()));
  CHECK(dynamic_cast<SequentialShuffleSampler*>(make_sampler(m, {4, SamplerStrategy::none, 0}).get()));
  CHECK(parse_strategy("batch_balanced") == SamplerStrategy::batch_balanced);
}
