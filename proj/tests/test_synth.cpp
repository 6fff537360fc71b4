#include "doctest.h"
#include "histo/manifest.hpp"
#include "histo/synth.hpp"
#include "test_support.hpp"

using namespace histo;

TEST_CASE("generate_synthetic: layout loads as a BRACS folder tree") {
  histo::test::TempDir dir("synth");
  SynthSpec spec;
  spec.per_class = 20;
  spec.dims = {32, 32};
  CHECK(generate_synthetic(dir.path(), spec) == 140);
  auto loaded = load_manifest(dir.path(), ManifestLayout::bracs_folders);
  const auto& m = loaded.manifest;
  CHECK(m.size() == 140);
  for (auto c : kAllClasses) CHECK(m.class_counts().at(c) == 20);
  CHECK(m.class_counts(Split::train).at(ClassCode::IC) == 14);
  CHECK(m.class_counts(Split::val).at(ClassCode::IC) == 3);
  CHECK(m.class_counts(Split::test).at(ClassCode::IC) == 3);
  CHECK(loaded.report.empty());
  const auto img = load_image(m.records().front().image_path);
  CHECK(img.height() == 32);
  CHECK(img.width() == 32);
}

TEST_CASE("synth_image: bitwise deterministic and class dependent") {
  SynthSpec spec;
  spec.dims = {24, 24};
  CHECK(synth_image(ClassCode::PB, 3, spec) == synth_image(ClassCode::PB, 3, spec));
  CHECK_FALSE(synth_image(ClassCode::PB, 3, spec) == synth_image(ClassCode::PB, 4, spec));
  CHECK_FALSE(synth_image(ClassCode::PB, 3, spec) == synth_image(ClassCode::N, 3, spec));
  spec.seed = 1;
  SynthSpec other = spec;
  other.seed = 2;
  CHECK_FALSE(synth_image(ClassCode::IC, 0, spec) == synth_image(ClassCode::IC, 0, other));
}

TEST_CASE("generate_synthetic: fewer classes and bad specs") {
  histo::test::TempDir dir("synth3");
  SynthSpec spec;
  spec.classes = 3;
  spec.per_class = 5;
  spec.dims = {8, 8};
  CHECK(generate_synthetic(dir.path(), spec) == 15);
  CHECK(load_manifest(dir.path(), ManifestLayout::bracs_folders).manifest.class_counts().size() == 3);
  spec.classes = 8;
  CHECK_THROWS_AS(generate_synthetic(dir.path(), spec), ConfigError);
}
