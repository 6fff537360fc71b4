#include <cmath>
#include <doctest.h>

#include "histo/error.hpp"
#include "histo/nn/losses.hpp"
#include "histo/schedule.hpp"
#include "nn_oracles.hpp"

using namespace histo;
using namespace histo::nn;
using histo::test::Matrix;

namespace {

torch::Tensor random_soft_targets(int64_t b, int64_t k) { return torch::softmax(torch::randn({b, k}) * 2.0, 1); }

}  // namespace

TEST_CASE("uniform logits give ln 7 for every loss at gamma 0 and any smoothing") {
  const auto logits = torch::zeros({5, 7});
  const auto targets = one_hot_targets(torch::tensor({0, 1, 2, 3, 6}), 7);
  CHECK(cross_entropy(logits, targets).item<double>() == doctest::Approx(std::log(7.0)).epsilon(1e-6));
  CHECK(label_smoothing_ce(logits, targets, 0.35).item<double>() == doctest::Approx(std::log(7.0)).epsilon(1e-6));
  CHECK(focal_loss(logits, targets, 0.0).item<double>() == doctest::Approx(std::log(7.0)).epsilon(1e-6));
  CHECK(std::abs(std::log(7.0) - 1.9459) < 1e-4);
}

TEST_CASE("a large true-class margin drives the loss to zero") {
  auto logits = torch::zeros({1, 7});
  logits[0][3] = 60.0;
  const auto t = one_hot_targets(torch::tensor({3}), 7);
  CHECK(cross_entropy(logits, t).item<double>() < 1e-12);
  CHECK(focal_loss(logits, t, 2.0).item<double>() < 1e-12);
}

TEST_CASE("losses match the scalar oracles on random batches") {
  torch::manual_seed(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto logits = torch::randn({4, 7}, torch::kDouble) * 3.0;
    const auto targets = trial % 2 ? one_hot_targets(torch::randint(0, 7, {4}), 7).to(torch::kDouble)
                                   : random_soft_targets(4, 7).to(torch::kDouble);
    const Matrix z = test::to_matrix(logits), t = test::to_matrix(targets);
    CHECK(cross_entropy(logits, targets).item<double>() == doctest::Approx(test::ce_oracle(z, t)).epsilon(1e-12));
    CHECK(label_smoothing_ce(logits, targets, 0.35).item<double>() ==
          doctest::Approx(test::label_smoothing_oracle(z, t, 0.35)).epsilon(1e-12));
    CHECK(focal_loss(logits, targets, 2.0).item<double>() ==
          doctest::Approx(test::focal_oracle(z, t, 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("reductions: gamma 0 and smoothing 0 are cross entropy") {
  torch::manual_seed(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto logits = torch::randn({8, 7}) * 4.0;
    const auto targets = random_soft_targets(8, 7);
    const double ce = cross_entropy(logits, targets).item<double>();
    CHECK(std::abs(focal_loss(logits, targets, 0.0).item<double>() - ce) <= 1e-6 * std::abs(ce));
    CHECK(std::abs(label_smoothing_ce(logits, targets, 0.0).item<double>() - ce) <= 1e-6 * std::abs(ce));
  }
}

TEST_CASE("smoothing 1 makes the loss independent of the target") {
  torch::manual_seed(3);
  const auto logits = torch::randn({6, 7});
  const double a = label_smoothing_ce(logits, one_hot_targets(torch::randint(0, 7, {6}), 7), 1.0).item<double>();
  const double b = label_smoothing_ce(logits, random_soft_targets(6, 7), 1.0).item<double>();
  CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("focal is strictly below cross entropy for confident correct predictions") {
  const auto t = one_hot_targets(torch::tensor({0}), 2);
  for (double p = 0.51; p < 0.995; p += 0.01) {
    const auto logits = torch::tensor({{std::log(p), std::log(1.0 - p)}}, torch::kDouble);
    const double ce = cross_entropy(logits, t.to(torch::kDouble)).item<double>();
    const double fl = focal_loss(logits, t.to(torch::kDouble), 2.0).item<double>();
    CHECK(fl < ce);
    CHECK(fl == doctest::Approx(std::pow(1.0 - p, 2.0) * -std::log(p)).epsilon(1e-9));
  }
}

TEST_CASE("losses are nonnegative and finite on finite logits") {
  torch::manual_seed(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto logits = torch::randn({4, 7}) * 20.0;
    const auto targets = random_soft_targets(4, 7);
    for (double v : {cross_entropy(logits, targets).item<double>(),
                     label_smoothing_ce(logits, targets, 0.35).item<double>(),
                     focal_loss(logits, targets, 2.0).item<double>()}) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("loss gradients match central finite differences") {
  torch::manual_seed(13);
  const auto logits = torch::randn({3, 7}, torch::kDouble);
  const auto targets = random_soft_targets(3, 7).to(torch::kDouble);
  CHECK(test::gradient_relative_error([&](const torch::Tensor& z) { return cross_entropy(z, targets); }, logits) <
        1e-2);
  CHECK(test::gradient_relative_error([&](const torch::Tensor& z) { return label_smoothing_ce(z, targets, 0.35); },
                                      logits) < 1e-2);
  CHECK(test::gradient_relative_error([&](const torch::Tensor& z) { return focal_loss(z, targets, 2.0); }, logits) <
        1e-2);
}

TEST_CASE("invalid loss inputs") {
  const auto logits = torch::zeros({2, 7});
  CHECK_THROWS_AS(cross_entropy(logits, torch::zeros({2, 6})), ConfigError);
  auto bad = logits.clone();
  bad[1][2] = std::numeric_limits<float>::quiet_NaN();
  const auto t = one_hot_targets(torch::tensor({0, 1}), 7);
  try {
    cross_entropy(bad, t);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("first bad row 1") != std::string::npos);
  }
  CHECK_THROWS_AS(focal_loss(logits, t, -1.0), ConfigError);
  CHECK_THROWS_AS(label_smoothing_ce(logits, t, 1.5), ConfigError);
}

TEST_CASE("compute_loss dispatches on the loss kind") {
  torch::manual_seed(17);
  const auto logits = torch::randn({4, 7});
  const auto t = random_soft_targets(4, 7);
  LossSpec s;
  s.kind = LossKind::focal;
  s.gamma = 1.5;
  CHECK(compute_loss(logits, t, s).item<double>() == doctest::Approx(focal_loss(logits, t, 1.5).item<double>()));
  s.kind = LossKind::label_smoothing_ce;
  s.smoothing = 0.2;
  CHECK(compute_loss(logits, t, s).item<double>() ==
        doctest::Approx(label_smoothing_ce(logits, t, 0.2).item<double>()));
}

TEST_CASE("cosine schedule endpoints, midpoint and monotonicity") {
  CHECK(cosine_lr(0, 100, 1e-3, 1e-6) == doctest::Approx(1e-3));
  CHECK(cosine_lr(100, 100, 1e-3, 1e-6) == doctest::Approx(1e-6));
  CHECK(cosine_lr(50, 100, 1e-3, 1e-6) == doctest::Approx((1e-3 + 1e-6) / 2.0));
  double prev = cosine_lr(0, 1000, 1e-3, 1e-6);
  for (int s = 1; s <= 1000; ++s) {
    const double lr = cosine_lr(s, 1000, 1e-3, 1e-6);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK_THROWS_AS(cosine_lr(0, 0, 1e-3, 1e-6), ConfigError);
  CHECK_THROWS_AS(cosine_lr(5, 4, 1e-3, 1e-6), ConfigError);
}
