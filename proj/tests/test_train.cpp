#include <doctest.h>
#include <fstream>
#include <random>

#include "histo/error.hpp"
#include "histo/nn/train.hpp"
#include "test_support.hpp"

using namespace histo;
using namespace histo::nn;

namespace {

const Rgb kColours[] = {{220, 30, 30}, {30, 200, 40}, {40, 50, 210}};

// Solid-colour images with mild noise, one colour per class.
class SolidSource : public ImageSource {
 public:
  SolidSource(const DatasetManifest& m, Dims dims) {
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> noise(-12, 12);
    for (const auto& r : m.records()) {
      const Rgb c = kColours[index_of(r.label)];
      ImageBuffer img(dims.height, dims.width, c);
      for (auto& b : img.data()) b = static_cast<std::uint8_t>(std::clamp(b + noise(rng), 0, 255));
      images_.push_back(std::move(img));
    }
  }
  ImageBuffer get(std::size_t i) override { return images_.at(i); }

 private:
  std::vector<ImageBuffer> images_;
};

// 200 samples over 3 classes: 140 train, 40 val, 20 test.
DatasetManifest three_class_manifest() {
  std::vector<SampleRecord> records;
  const ClassCode codes[] = {ClassCode::N, ClassCode::PB, ClassCode::UDH};
  for (int i = 0; i < 200; ++i) {
    SampleRecord r;
    r.id = "s" + std::to_string(i);
    r.image_path = "/mem/" + r.id + ".png";
    r.label = codes[i % 3];
    r.split = i < 140 ? Split::train : (i < 180 ? Split::val : Split::test);
    records.push_back(r);
  }
  return DatasetManifest(std::move(records), SplitMode::custom);
}

ModelConfig probe_model() {
  ModelConfig m;
  m.backbone = BackboneName::linear_probe;
  m.num_classes = 3;
  m.input_dims = {32, 32};
  m.dropout = 0.0;
  return m;
}

TrainConfig probe_train(int epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.base_lr = 0.05;
  t.sampler.batch_size = 12;
  t.sampler.strategy = SamplerStrategy::batch_balanced;
  t.augment = AugmentSpec::disabled();
  t.seed = 4;
  return t;
}

}  // namespace

TEST_CASE("input tensors use ImageNet normalisation in NCHW order") {
  ImageBuffer img(2, 3, Rgb{255, 0, 0});
  const auto t = to_input_tensor({img});
  CHECK(t.sizes() == torch::IntArrayRef({1, 3, 2, 3}));
  CHECK(t[0][0][1][2].item<double>() == doctest::Approx((1.0 - 0.485) / 0.229).epsilon(1e-6));
  CHECK(t[0][1][0][0].item<double>() == doctest::Approx(-0.456 / 0.224).epsilon(1e-6));
  CHECK(t[0][2][0][0].item<double>() == doctest::Approx(-0.406 / 0.225).epsilon(1e-6));
  CHECK_THROWS_AS(to_input_tensor({img, ImageBuffer(3, 3)}), DataError);
}

TEST_CASE("tensor mixing agrees with pixel mixing") {
  std::vector<ImageBuffer> batch{test::random_image(10, 12, 1), test::random_image(10, 12, 2),
                                 test::random_image(10, 12, 3)};
  const auto cut = cutmix_plan({2, 0, 1}, Rect{3, 2, 5, 4}, {10, 12});
  CHECK(torch::equal(apply_mix(to_input_tensor(batch), cut), to_input_tensor(mix_images(batch, cut))));
  const auto mix = mixup_plan({1, 2, 0}, 0.3);
  // mix_images rounds to 8 bits; one level is 1/255 / 0.224 in normalised units.
  CHECK(torch::allclose(apply_mix(to_input_tensor(batch), mix), to_input_tensor(mix_images(batch, mix)), 0.0,
                        0.51 / 255.0 / 0.224));
  CHECK(torch::equal(apply_mix(to_input_tensor(batch), MixPlan{}), to_input_tensor(batch)));
}

TEST_CASE("soft label tensor rows") {
  const auto t = soft_label_tensor({SoftLabel::one_hot(1, 3), SoftLabel{{0.25, 0.75, 0.0}}});
  CHECK(t.sizes() == torch::IntArrayRef({2, 3}));
  CHECK(t[0][1].item<float>() == 1.0f);
  CHECK(t[1][1].item<float>() == 0.75f);
}

TEST_CASE("linear probe learns a separable three-class set") {
  test::TempDir dir("train_probe");
  const auto m = three_class_manifest();
  SolidSource src(m, {32, 32});
  TrainOutputs out{dir.path() / "ckpt", dir.path() / "metrics.jsonl", {}};
  const auto r = train(probe_model(), probe_train(5), m, src, out);
  REQUIRE(r.history.size() == 5);
  CHECK(r.history.back().val_accuracy >= 0.99);
  double best = 0.0;
  for (const auto& e : r.history) best = std::max(best, e.val_weighted_f1);
  CHECK(r.best_val_weighted_f1 == best);
  CHECK(r.history.back().lr == doctest::Approx(probe_train(5).eta_min));
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].lr <= r.history[i - 1].lr);

  std::ifstream log(out.metrics_log);
  int lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  CHECK(lines == 5);

  auto loaded = load_checkpoint(r.best_checkpoint);
  CHECK(loaded.meta.epoch == r.best_epoch);
  const auto p = predict(loaded.model, m, Split::test, src, 16);
  CHECK(compute_metrics(confusion_of(p, 3)).accuracy >= 0.99);
}

TEST_CASE("zero epochs saves the initialised model") {
  test::TempDir dir("train_zero");
  const auto m = three_class_manifest();
  SolidSource src(m, {32, 32});
  ModelConfig mc = probe_model();
  mc.head = HeadType::pyramid;
  mc.pyramid_width = 4;
  const auto r = train(mc, probe_train(0), m, src, {dir.path(), {}, {}});
  CHECK(r.history.empty());
  auto loaded = load_checkpoint(r.best_checkpoint);
  auto fresh = build_model(mc);
  CHECK(parameter_checksum(*loaded.model) == parameter_checksum(*fresh));
  CHECK(loaded.meta.model.head == HeadType::pyramid);
}

TEST_CASE("identical seeds give identical epoch-1 losses") {
  test::TempDir dir("train_det");
  const auto m = three_class_manifest();
  SolidSource src(m, {32, 32});
  TrainConfig t = probe_train(2);
  t.augment = AugmentSpec{};
  t.augment.cutmix_prob = 0.5;
  const auto a = train(probe_model(), t, m, src, {dir.path() / "a", {}, {}});
  const auto b = train(probe_model(), t, m, src, {dir.path() / "b", {}, {}});
  CHECK(a.history[0].train_loss == b.history[0].train_loss);
  CHECK(a.history[1].train_loss == b.history[1].train_loss);
  t.seed = 5;
  const auto c = train(probe_model(), t, m, src, {dir.path() / "c", {}, {}});
  CHECK(c.history[0].train_loss != a.history[0].train_loss);
}

TEST_CASE("stopping early keeps the full schedule") {
  test::TempDir dir("train_stop");
  const auto m = three_class_manifest();
  SolidSource src(m, {32, 32});
  const auto full = train(probe_model(), probe_train(3), m, src, {dir.path() / "a", {}, {}});
  TrainOutputs out{dir.path() / "b", {}, {}};
  out.stop_after_epochs = 1;
  const auto part = train(probe_model(), probe_train(3), m, src, out);
  REQUIRE(part.history.size() == 1);
  CHECK(part.history[0].train_loss == full.history[0].train_loss);
  CHECK(part.history[0].lr == full.history[0].lr);
}

TEST_CASE("training errors") {
  test::TempDir dir("train_err");
  const auto m = three_class_manifest();
  SolidSource src(m, {32, 32});

  SUBCASE("empty val split") {
    std::vector<SampleRecord> recs = m.records();
    for (auto& r : recs) {
      if (r.split == Split::val) r.split = Split::train;
    }
    DatasetManifest no_val(recs, SplitMode::custom);
    SolidSource s2(no_val, {32, 32});
    CHECK_THROWS_AS(train(probe_model(), probe_train(1), no_val, s2, {dir.path(), {}, {}}), DataError);
  }
  SUBCASE("labels outside the model's classes") {
    ModelConfig mc = probe_model();
    mc.num_classes = 2;
    CHECK_THROWS_AS(train(mc, probe_train(1), m, src, {dir.path(), {}, {}}), ConfigError);
  }
  SUBCASE("unwritable checkpoint directory") {
    std::ofstream(dir.path() / "file") << "x";
    CHECK_THROWS_AS(train(probe_model(), probe_train(0), m, src, {dir.path() / "file" / "ckpt", {}, {}}),
                    TrainingError);
  }
  SUBCASE("divergence is reported with the batch") {
    TrainConfig t = probe_train(1);
    t.base_lr = 1e38;
    try {
      train(probe_model(), t, m, src, {dir.path(), {}, {}});
      FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
      CHECK(std::string(e.what()).find("epoch 1, batch") != std::string::npos);
    }
  }
}
