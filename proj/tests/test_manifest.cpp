#include <fstream>

#include "doctest.h"
#include "histo/manifest.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace histo;
using histo::test::bracs_table_counts;
using histo::test::manifest_with_counts;
using histo::test::TempDir;

namespace {

void write_tiny_png(const fs::path& p) {
  fs::create_directories(p.parent_path());
  save_png(ImageBuffer(2, 2, Rgb{10, 20, 30}), p);
}

void check_histogram(const DatasetManifest& m) {
  ClassCounts recount;
  for (const auto& r : m.records()) ++recount[r.label];
  CHECK(recount == m.class_counts());
}

}  // namespace

TEST_CASE("labels: seven codes with a fixed lesion-group mapping") {
  CHECK(kAllClasses.size() == 7);
  CHECK(group_of(ClassCode::N) == LesionGroup::benign);
  CHECK(group_of(ClassCode::PB) == LesionGroup::benign);
  CHECK(group_of(ClassCode::UDH) == LesionGroup::benign);
  CHECK(group_of(ClassCode::FEA) == LesionGroup::atypical);
  CHECK(group_of(ClassCode::ADH) == LesionGroup::atypical);
  CHECK(group_of(ClassCode::DCIS) == LesionGroup::malignant);
  CHECK(group_of(ClassCode::IC) == LesionGroup::malignant);
  CHECK(parse_class("5_DCIS") == ClassCode::DCIS);
  CHECK(parse_class("IC") == ClassCode::IC);
  CHECK_FALSE(parse_class("XYZ").has_value());
}

TEST_CASE("load_manifest: BRACS folder layout reproduces the BRACS class counts") {
  TempDir dir("bracs");
  const auto counts = bracs_table_counts();
  // Spread each class over the three split folders like the distribution does.
  for (const auto& [c, n] : counts) {
    for (std::int64_t i = 0; i < n; ++i) {
      const char* split = i % 10 < 7 ? "train" : (i % 10 < 9 ? "val" : "test");
      write_tiny_png(dir.path() / split / code_name(c) /
                     ("BRACS_" + std::string(code_name(c)) + "_" + std::to_string(i) + ".png"));
    }
  }
  auto loaded = load_manifest(dir.path(), ManifestLayout::bracs_folders);
  const auto& m = loaded.manifest;
  CHECK(m.size() == 4539);
  CHECK(m.class_counts() == counts);
  CHECK(m.class_counts().at(ClassCode::N) == 484);
  CHECK(m.class_counts().at(ClassCode::PB) == 836);
  CHECK(m.split_size(Split::train) + m.split_size(Split::val) + m.split_size(Split::test) == 4539);
  for (const auto& r : m.records()) CHECK(r.origin == Origin::original);
  CHECK(loaded.report.empty());
  check_histogram(m);
}

TEST_CASE("load_manifest: error paths") {
  SUBCASE("missing root is a config error") {
    CHECK_THROWS_AS(load_manifest("/definitely/not/here", ManifestLayout::bracs_folders), ConfigError);
  }
  SUBCASE("empty root has no samples") {
    TempDir dir("empty");
    CHECK_THROWS_WITH_AS(load_manifest(dir.path(), ManifestLayout::bracs_folders), "no samples found", DataError);
  }
  SUBCASE("unknown class folder is fatal and named") {
    TempDir dir("unknown");
    write_tiny_png(dir.path() / "train" / "N" / "a.png");
    write_tiny_png(dir.path() / "train" / "LCIS" / "b.png");
    try {
      load_manifest(dir.path(), ManifestLayout::bracs_folders);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("LCIS") != std::string::npos);
    }
  }
  SUBCASE("unreadable image is excluded with a warning") {
    TempDir dir("unreadable");
    write_tiny_png(dir.path() / "train" / "N" / "good.png");
    std::ofstream(dir.path() / "train" / "N" / "bad.png") << "not a png";
    auto loaded = load_manifest(dir.path(), ManifestLayout::bracs_folders);
    CHECK(loaded.manifest.size() == 1);
    REQUIRE(loaded.report.warnings.size() == 1);
    CHECK(loaded.report.warnings[0].subject.find("bad.png") != std::string::npos);
    CHECK(loaded.report.to_text().find("unreadable") != std::string::npos);
  }
}

TEST_CASE("load_manifest: CSV index with two rows per class") {
  TempDir dir("csv");
  write_tiny_png(dir.path() / "img.png");
  std::ofstream csv(dir.path() / "manifest.csv");
  csv << "id,path,label,split\n";
  for (auto c : kAllClasses) {
    for (int i = 0; i < 2; ++i) {
      csv << code_name(c) << i << ",img.png," << code_name(c) << "," << (i == 0 ? "train" : "test") << "\n";
    }
  }
  csv.close();
  auto loaded = load_manifest(dir.path(), ManifestLayout::csv_index);
  CHECK(loaded.manifest.size() == 14);
  for (auto c : kAllClasses) CHECK(loaded.manifest.class_counts().at(c) == 2);
  CHECK(loaded.manifest.split_size(Split::train) == 7);
  CHECK(loaded.manifest.records()[0].image_path == dir.path() / "img.png");
}

TEST_CASE("manifest: duplicate ids are rejected") {
  SampleRecord a;
  a.id = "x";
  CHECK_THROWS_AS(DatasetManifest({a, a}, SplitMode::bracs_default), DataError);
}

TEST_CASE("manifest CSV written by the pipeline loads back with provenance") {
  TempDir dir("roundtrip");
  write_tiny_png(dir.path() / "img.png");
  SampleRecord r;
  r.id = "a,1";  // exercises quoting
  r.image_path = dir.path() / "img.png";
  r.label = ClassCode::ADH;
  DatasetManifest m({r}, SplitMode::bracs_default);
  auto up = upsample(m, 3);
  write_manifest_csv(up, dir.path() / "manifest.csv");
  auto back = load_manifest(dir.path(), ManifestLayout::csv_index).manifest;
  REQUIRE(back.size() == 3);
  CHECK(back.records()[0].id == "a,1");
  CHECK(back.records()[1].origin == Origin::upsample_copy);
  CHECK(back.records()[1].source_id == "a,1");
  CHECK(back.class_counts() == up.class_counts());
}

TEST_CASE("custom_split") {
  const auto full = manifest_with_counts(bracs_table_counts());

  SUBCASE("degenerate probabilities put everything in train") {
    for (std::uint64_t seed : {0ULL, 7ULL, 12345ULL}) {
      auto m = custom_split(full, {1.0, 0.0, 0.0}, seed);
      CHECK(m.split_size(Split::train) == full.size());
      CHECK(m.split_mode() == SplitMode::custom);
    }
  }
  SUBCASE("0.9/0.07/0.03 with seed 42 on 4539 records (frozen regression counts)") {
    ValidationReport report;
    auto m = custom_split(full, {0.9, 0.07, 0.03}, 42, &report);
    CHECK(m.split_size(Split::train) == 4112);
    CHECK(m.split_size(Split::val) == 300);
    CHECK(m.split_size(Split::test) == 127);
    CHECK(report.empty());
    // Close to the expectation (4085, 318, 136).
    CHECK(std::abs(static_cast<double>(m.split_size(Split::train)) - 4085.1) < 3 * std::sqrt(4539 * 0.9 * 0.1));
  }
  SUBCASE("deterministic and a partition") {
    auto a = custom_split(full, {0.9, 0.07, 0.03}, 42);
    auto b = custom_split(full, {0.9, 0.07, 0.03}, 42);
    auto c = custom_split(full, {0.9, 0.07, 0.03}, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.records()[i].split == b.records()[i].split);
      any_diff |= a.records()[i].split != c.records()[i].split;
    }
    CHECK(any_diff);
    CHECK(a.split_size(Split::train) + a.split_size(Split::val) + a.split_size(Split::test) == a.size());
    check_histogram(a);
  }
  SUBCASE("existing split labels are discarded") {
    auto tests_only = manifest_with_counts(bracs_table_counts(), Split::test);
    auto m = custom_split(tests_only, {1.0, 0.0, 0.0}, 1);
    CHECK(m.split_size(Split::test) == 0);
  }
  SUBCASE("probabilities must sum to one") {
    CHECK_THROWS_AS(custom_split(full, {0.9, 0.07, 0.02}, 1), ConfigError);
  }
  SUBCASE("empty resulting split is a warning, not an error") {
    ValidationReport report;
    auto m = custom_split(full, {0.5, 0.5, 0.0}, 3, &report);
    CHECK(m.split_size(Split::test) == 0);
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].subject == "test");
  }
}

TEST_CASE("upsample") {
  const auto counts = bracs_table_counts();
  const auto full = manifest_with_counts(counts);

  for (std::int64_t target : {1000, 2000}) {
    CAPTURE(target);
    auto m = upsample(full, target, 5);
    for (auto c : kAllClasses) CHECK(m.class_counts(Split::train).at(c) == target);
    check_histogram(m);
    std::int64_t n_copies = 0;
    std::map<std::string, const SampleRecord*> by_id;
    for (const auto& r : m.records()) by_id[r.id] = &r;
    for (const auto& r : m.records()) {
      if (r.origin != Origin::upsample_copy) continue;
      if (r.label == ClassCode::N) ++n_copies;
      REQUIRE(by_id.contains(r.source_id));
      const auto* src = by_id.at(r.source_id);
      CHECK(src->origin == Origin::original);
      CHECK(src->label == r.label);
      CHECK(src->image_path == r.image_path);
    }
    CHECK(n_copies == target - 484);
  }

  SUBCASE("round-robin: copy multiplicities differ by at most one within a class") {
    auto m = upsample(full, 2000, 9);
    std::map<std::string, int> uses;
    for (const auto& r : m.records()) {
      if (r.origin == Origin::upsample_copy && r.label == ClassCode::N) ++uses[r.source_id];
    }
    CHECK(uses.size() == 484);  // 1516 copies cycle over all 484 originals
    int lo = 1 << 30, hi = 0;
    for (const auto& [id, n] : uses) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(lo == 1516 / 484);
    CHECK(hi == 1516 / 484 + 1);
  }
  SUBCASE("classes at or above the target are unchanged") {
    ClassCounts big = counts;
    big[ClassCode::PB] = 2500;
    auto m = upsample(manifest_with_counts(big), 2000);
    CHECK(m.class_counts(Split::train).at(ClassCode::PB) == 2500);
    CHECK(m.class_counts(Split::train).at(ClassCode::N) == 2000);
  }
  SUBCASE("val and test are untouched") {
    auto m = custom_split(full, {0.8, 0.1, 0.1}, 4);
    auto up = upsample(m, 1000);
    CHECK(up.class_counts(Split::val) == m.class_counts(Split::val));
    CHECK(up.class_counts(Split::test) == m.class_counts(Split::test));
  }
  SUBCASE("a present class without train samples is fatal") {
    auto m = manifest_with_counts({{ClassCode::N, 3}});
    std::vector<SampleRecord> recs = m.records();
    SampleRecord extra;
    extra.id = "ic_val";
    extra.label = ClassCode::IC;
    extra.split = Split::val;
    recs.push_back(extra);
    CHECK_THROWS_AS(upsample(DatasetManifest(recs, SplitMode::bracs_default), 10), DataError);
  }
  SUBCASE("deterministic per seed") {
    auto a = upsample(full, 1000, 11), b = upsample(full, 1000, 11);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.records()[i].id == b.records()[i].id);
  }
}
