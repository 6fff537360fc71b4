#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "histo/error.hpp"
#include "histo/labels.hpp"

namespace histo {

enum class Split { train, val, test };
enum class Origin { original, upsample_copy };
enum class SplitMode { bracs_default, custom };
enum class ManifestLayout { bracs_folders, csv_index };

std::string_view split_name(Split s);
Split parse_split(std::string_view text);  // throws ConfigError
std::string_view layout_name(ManifestLayout l);
ManifestLayout parse_layout(std::string_view text);

struct SampleRecord {
  std::string id;
  std::filesystem::path image_path;
  ClassCode label = ClassCode::N;
  Split split = Split::train;
  Origin origin = Origin::original;
  std::string source_id;  // id of the original when origin == upsample_copy
};

using ClassCounts = std::map<ClassCode, std::int64_t>;

/// Immutable-by-convention collection of samples. Class counts are always
/// recomputed from the records, so they cannot drift.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  DatasetManifest(std::vector<SampleRecord> records, SplitMode mode);

  const std::vector<SampleRecord>& records() const { return records_; }
  SplitMode split_mode() const { return split_mode_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  ClassCounts class_counts() const;
  ClassCounts class_counts(Split split) const;
  std::size_t split_size(Split split) const;
  /// Indices into records() belonging to the split, in record order.
  std::vector<std::size_t> indices(Split split) const;

 private:
  std::vector<SampleRecord> records_;
  SplitMode split_mode_ = SplitMode::bracs_default;
};

struct LoadedManifest {
  DatasetManifest manifest;
  ValidationReport report;
};

/// bracs_folders: root/{train,val,test}/<class>/<image>, or root/<class>/<image>
/// (everything lands in train). csv_index: root/manifest.csv, or `csv_path`
/// when given, with header id,path,label,split; relative paths resolve
/// against the CSV's directory.
LoadedManifest load_manifest(const std::filesystem::path& root, ManifestLayout layout,
                             const std::filesystem::path& csv_path = {});

/// Independent per-record assignment with probabilities (train, val, test).
DatasetManifest custom_split(const DatasetManifest& manifest, std::array<double, 3> probs,
                             std::uint64_t seed, ValidationReport* report = nullptr);

/// Duplicates train records of every class below `target_per_class` until that
/// class has exactly `target_per_class` train records. Classes at or above the
/// target are untouched; val/test are untouched.
DatasetManifest upsample(const DatasetManifest& manifest, std::int64_t target_per_class,
                         std::uint64_t seed = 0);

void write_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

}  // namespace histo
