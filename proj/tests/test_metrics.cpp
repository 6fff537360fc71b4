#include <algorithm>
#include <numeric>
#include <random>

#include "core_oracles.hpp"
#include "doctest.h"
#include "histo/metrics.hpp"

using namespace histo;
using doctest::Approx;
using histo::test::brute_force_metrics;

TEST_CASE("metrics: perfect predictions") {
  std::vector<int> t{0, 1, 2, 3, 4, 5, 6, 6, 5, 4};
  auto r = compute_metrics(confusion(t, t));
  CHECK(r.accuracy == 1.0);
  CHECK(r.weighted_f1 == 1.0);
  CHECK(r.sensitivity == 1.0);
  CHECK(r.total == 10);
}

TEST_CASE("metrics: two-class hand computation") {
  ConfusionMatrix cm({{8, 2}, {4, 6}});
  auto r = compute_metrics(cm);
  CHECK(r.accuracy == Approx(0.7).epsilon(1e-12));
  CHECK(r.per_class[0].recall == Approx(0.8).epsilon(1e-12));
  CHECK(r.per_class[1].recall == Approx(0.6).epsilon(1e-12));
  CHECK(r.per_class[0].precision == Approx(8.0 / 12).epsilon(1e-12));
  CHECK(r.per_class[1].precision == Approx(0.75).epsilon(1e-12));
  const double f0 = 2 * (8.0 / 12) * 0.8 / (8.0 / 12 + 0.8);
  const double f1 = 2 * 0.75 * 0.6 / 1.35;
  CHECK(r.per_class[0].f1 == Approx(f0).epsilon(1e-12));
  CHECK(f0 == Approx(0.7273).epsilon(1e-4));
  CHECK(f1 == Approx(0.6667).epsilon(1e-4));
  CHECK(r.weighted_f1 == Approx(0.5 * f0 + 0.5 * f1).epsilon(1e-12));
  CHECK(r.weighted_f1 == Approx(0.6970).epsilon(1e-4));
  CHECK(r.sensitivity == Approx(0.7).epsilon(1e-12));
  CHECK(r.per_class[0].false_negative_rate == Approx(0.2).epsilon(1e-12));
  CHECK(r.per_class[0].false_positive_rate == Approx(4.0 / 12).epsilon(1e-12));
}

TEST_CASE("metrics: constant predictor") {
  std::vector<int> t{0, 0, 0, 1, 1, 2, 2, 2, 2, 3};
  std::vector<int> p(t.size(), 2);
  auto r = compute_metrics(confusion(t, p, 4));
  CHECK(r.accuracy == Approx(0.4).epsilon(1e-12));
  CHECK(r.sensitivity == Approx(0.25).epsilon(1e-12));
  CHECK(r.per_class[0].precision == 0.0);
  CHECK(r.per_class[0].precision_undefined);
  CHECK(r.per_class[0].f1_undefined);
  const double f2 = 2 * 0.4 * 1.0 / 1.4;
  CHECK(r.weighted_f1 == Approx(0.4 * f2).epsilon(1e-12));
}

TEST_CASE("metrics: zero diagonal") {
  ConfusionMatrix cm({{0, 3}, {5, 0}});
  auto r = compute_metrics(cm);
  CHECK(r.accuracy == 0.0);
  CHECK(r.weighted_f1 == 0.0);
  CHECK(r.sensitivity == 0.0);
}

TEST_CASE("metrics: 1000 random cases against a brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const int n = 1 + static_cast<int>(rng() % 200);
    std::uniform_int_distribution<int> lab(0, k - 1);
    std::vector<int> t(n), p(n);
    for (int i = 0; i < n; ++i) {
      t[i] = lab(rng);
      p[i] = (rng() % 3 == 0) ? t[i] : lab(rng);
    }
    const auto r = compute_metrics(confusion(t, p, k));
    const auto o = brute_force_metrics(t, p, k);
    REQUIRE(std::abs(r.accuracy - o.accuracy) < 1e-9);
    REQUIRE(std::abs(r.weighted_f1 - o.weighted_f1) < 1e-9);
    REQUIRE(std::abs(r.sensitivity - o.macro_recall) < 1e-9);
  }
}

TEST_CASE("metrics: invariant under a consistent class relabelling") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> lab(0, 6);
  std::vector<int> t(300), p(300);
  for (int i = 0; i < 300; ++i) {
    t[i] = lab(rng);
    p[i] = rng() % 2 ? t[i] : lab(rng);
  }
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> tp(300), pp(300);
  for (int i = 0; i < 300; ++i) {
    tp[i] = perm[t[i]];
    pp[i] = perm[p[i]];
  }
  const auto a = compute_metrics(confusion(t, p));
  const auto b = compute_metrics(confusion(tp, pp));
  CHECK(a.accuracy == Approx(b.accuracy).epsilon(1e-12));
  CHECK(a.weighted_f1 == Approx(b.weighted_f1).epsilon(1e-12));
  CHECK(a.sensitivity == Approx(b.sensitivity).epsilon(1e-12));
}

TEST_CASE("metrics: invalid input") {
  CHECK_THROWS_AS(compute_metrics(ConfusionMatrix(3)), std::invalid_argument);
  std::vector<int> t{0, 1}, p{0};
  CHECK_THROWS_AS(confusion(t, p), std::invalid_argument);
  std::vector<int> bad{0, 9};
  CHECK_THROWS_AS(confusion(bad, bad), std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix({{1, 2}, {3}}), std::invalid_argument);
}
