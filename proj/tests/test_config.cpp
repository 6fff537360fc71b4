#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "histo/config.hpp"
#include "test_support.hpp"

using namespace histo;

namespace {

const char* kMinimal = R"({
  "name": "mini",
  "dataset": {"root": "/data/bracs"},
  "preprocess": {"target_dims": [512, 512]},
  "model": {"backbone": "resnet50"},
  "train": {"epochs": 2}
})";

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse_config: minimal config takes defaults") {
  auto c = parse_config(kMinimal);
  CHECK(c.name == "mini");
  CHECK(c.dataset.root == "/data/bracs");
  CHECK(c.model.backbone == BackboneName::resnet50);
  CHECK(c.model.head == HeadType::attention);
  CHECK(c.model.input_dims == Dims{512, 512});
  CHECK(c.train.epochs == 2);
  CHECK(c.train.sampler.batch_size == 28);
  CHECK(c.train.weight_decay == 1e-4);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse_config: strictness") {
  SUBCASE("missing model section is named") {
    const auto e = error_of(R"({"dataset": {"root": "x"}, "train": {}})");
    CHECK(e.find("missing required section 'model'") != std::string::npos);
  }
  SUBCASE("unknown key names the dotted path") {
    const auto e = error_of(R"({"dataset": {"root": "x"}, "model": {"backbon": "resnet50"}, "train": {}})");
    CHECK(e.find("cfg.json") != std::string::npos);
    CHECK(e.find("model.backbon") != std::string::npos);
  }
  SUBCASE("type mismatch names the field") {
    const auto e = error_of(R"({"dataset": {"root": "x"}, "model": {}, "train": {"epochs": "ten"}})");
    CHECK(e.find("train.epochs") != std::string::npos);
  }
  SUBCASE("unknown backbone lists the valid names") {
    const auto e = error_of(R"({"dataset": {"root": "x"}, "model": {"backbone": "vgg16"}, "train": {}})");
    CHECK(e.find("vgg16") != std::string::npos);
    CHECK(e.find("resnet50") != std::string::npos);
  }
  SUBCASE("invalid JSON") { CHECK(error_of("{").find("invalid JSON") != std::string::npos); }
}

TEST_CASE("validate: tiling and resizing are mutually exclusive") {
  auto c = parse_config(kMinimal);
  c.tiling = TileSpec{};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.preprocess.target_dims.reset();
  CHECK_NOTHROW(c.validate());
  CHECK(c.model_input_dims() == Dims{1748, 1748});
}

TEST_CASE("validate: cutmix plus mixup probability above one") {
  auto c = parse_config(kMinimal);
  c.train.augment.cutmix_prob = 0.7;
  c.train.augment.mixup_prob = 0.7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("presets: all validate once a data root is supplied") {
  const auto names = preset_names();
  CHECK(names.size() >= 20);
  for (const auto& n : names) {
    CAPTURE(n);
    auto c = preset(n);
    REQUIRE(c.has_value());
    if (c->dataset.root.empty()) c->dataset.root = "/data/bracs";
    CHECK_NOTHROW(c->validate());
    // Presets survive a JSON round trip unchanged.
    CHECK(config_to_json(parse_config(config_to_json(*c))) == config_to_json(*c));
  }
  CHECK_FALSE(preset("nope").has_value());
  CHECK_THROWS_AS(resolve_config("preset:nope"), ConfigError);
}

TEST_CASE("presets: baseline focal ResNet50 row") {
  auto c = *preset("table7_resnet50_focal_512");
  CHECK(c.model.backbone == BackboneName::resnet50);
  CHECK(c.model.head == HeadType::attention);
  CHECK(c.model.dropout == 0.45);
  CHECK(c.model.pretrained);
  CHECK(c.preprocess.target_dims == Dims{512, 512});
  CHECK(c.preprocess.gray_noise);
  CHECK(c.train.loss.kind == LossKind::focal);
  CHECK(c.train.sampler.strategy == SamplerStrategy::batch_balanced);
  CHECK(c.dataset.split_mode == SplitMode::bracs_default);
}

TEST_CASE("presets: custom split with upsampling") {
  auto c = *preset("table6_resnet50_custom_up2000");
  CHECK(c.dataset.split_mode == SplitMode::custom);
  CHECK(c.dataset.upsample_target == 2000);
  CHECK(c.dataset.split_probs[0] == 0.9);
  auto t = *preset("table7_resnet50_tiling_focal_1024");
  CHECK(t.tiling.has_value());
  CHECK(t.model.input_dims == Dims{1024, 1024});
}

TEST_CASE("config files load and resolve") {
  histo::test::TempDir dir("cfg");
  const auto path = dir.path() / "c.json";
  std::ofstream(path) << kMinimal;
  CHECK(resolve_config(path.string()).name == "mini");
  CHECK_THROWS_AS(load_config(dir.path() / "missing.json"), ConfigError);
}

TEST_CASE("run directory resolution") {
  auto c = parse_config(kMinimal);
  setenv("HISTO_RUN_ROOT", "/tmp/histo_runs_test", 1);
  CHECK(resolve_run_dir(c) == std::filesystem::path("/tmp/histo_runs_test/mini"));
  c.run_dir = "/abs/dir";
  CHECK(resolve_run_dir(c) == std::filesystem::path("/abs/dir"));
  unsetenv("HISTO_RUN_ROOT");
  CHECK(run_root() == std::filesystem::path("runs"));
}
