#include "histo/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "histo/image.hpp"

namespace fs = std::filesystem;

namespace histo {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val" || text == "valid" || text == "validation") return Split::val;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split name: '" + std::string(text) + "'");
}

std::string_view layout_name(ManifestLayout l) {
  return l == ManifestLayout::bracs_folders ? "bracs_folders" : "csv_index";
}

ManifestLayout parse_layout(std::string_view text) {
  if (text == "bracs_folders") return ManifestLayout::bracs_folders;
  if (text == "csv_index") return ManifestLayout::csv_index;
  throw ConfigError("unknown manifest layout: '" + std::string(text) +
                    "' (expected bracs_folders or csv_index)");
}

DatasetManifest::DatasetManifest(std::vector<SampleRecord> records, SplitMode mode)
    : records_(std::move(records)), split_mode_(mode) {
  std::unordered_set<std::string> seen;
  for (const auto& r : records_) {
    if (!seen.insert(r.id).second) throw DataError("duplicate sample id: " + r.id);
  }
}

ClassCounts DatasetManifest::class_counts() const {
  ClassCounts counts;
  for (const auto& r : records_) ++counts[r.label];
  return counts;
}

ClassCounts DatasetManifest::class_counts(Split split) const {
  ClassCounts counts;
  for (const auto& r : records_) {
    if (r.split == split) ++counts[r.label];
  }
  return counts;
}

std::size_t DatasetManifest::split_size(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [&](const SampleRecord& r) { return r.split == split; }));
}

std::vector<std::size_t> DatasetManifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].split == split) out.push_back(i);
  }
  return out;
}

bool is_image_file(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff";
}

namespace {

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

struct Candidate {
  fs::path path;
  fs::path relative;
  ClassCode label;
  Split split;
};

void scan_class_dirs(const fs::path& root, const fs::path& dir, Split split,
                     std::vector<Candidate>& out, ValidationReport& report) {
  for (const auto& class_dir : sorted_entries(dir)) {
    if (!fs::is_directory(class_dir)) continue;
    auto name = class_dir.filename().string();
    auto label = parse_class(name);
    if (!label) throw ConfigError("unknown class folder name: '" + name + "' in " + dir.string());
    for (const auto& file : sorted_entries(class_dir)) {
      if (fs::is_directory(file)) continue;
      if (!is_image_file(file)) {
        report.warn(file.string(), "not an image file");
        continue;
      }
      out.push_back({file, fs::relative(file, root), *label, split});
    }
  }
}

// Minimal RFC-4180 style field splitter (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

DatasetManifest finish(std::vector<Candidate> candidates, ValidationReport& report) {
  std::vector<SampleRecord> records;
  std::map<std::string, int> stem_uses;
  for (const auto& c : candidates) ++stem_uses[c.path.stem().string()];
  for (auto& c : candidates) {
    if (!image_readable(c.path)) {
      report.warn(c.path.string(), "unreadable image file");
      continue;
    }
    SampleRecord r;
    auto stem = c.path.stem().string();
    r.id = stem_uses[stem] > 1 ? c.relative.replace_extension().generic_string() : stem;
    r.image_path = c.path;
    r.label = c.label;
    r.split = c.split;
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("no samples found");
  return DatasetManifest(std::move(records), SplitMode::bracs_default);
}

LoadedManifest load_folders(const fs::path& root) {
  LoadedManifest out;
  std::vector<Candidate> candidates;
  bool has_split_dirs = false;
  for (auto s : {Split::train, Split::val, Split::test}) {
    if (fs::is_directory(root / split_name(s))) has_split_dirs = true;
  }
  if (has_split_dirs) {
    for (const auto& entry : sorted_entries(root)) {
      if (!fs::is_directory(entry)) continue;
      auto split = parse_split(entry.filename().string());
      scan_class_dirs(root, entry, split, candidates, out.report);
    }
  } else {
    scan_class_dirs(root, root, Split::train, candidates, out.report);
  }
  out.manifest = finish(std::move(candidates), out.report);
  return out;
}

LoadedManifest load_csv(const fs::path& root, const fs::path& csv_path) {
  fs::path csv = csv_path.empty() ? root / "manifest.csv" : csv_path;
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open manifest CSV: " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("no samples found");
  auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "path" || header[2] != "label" ||
      header[3] != "split") {
    throw ConfigError("manifest CSV header must start with id,path,label,split: " + csv.string());
  }
  const bool has_origin = header.size() >= 6 && header[4] == "origin" && header[5] == "source_id";

  LoadedManifest out;
  std::vector<SampleRecord> records;
  const fs::path base = csv.parent_path();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() < 4) {
      throw DataError(csv.string() + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    auto label = parse_class(f[2]);
    if (!label) {
      throw ConfigError(csv.string() + ":" + std::to_string(line_no) + ": unknown class '" + f[2] + "'");
    }
    fs::path p = f[1];
    if (p.is_relative()) p = base / p;
    if (!image_readable(p)) {
      out.report.warn(p.string(), "unreadable image file");
      continue;
    }
    SampleRecord r;
    r.id = f[0];
    r.image_path = p;
    r.label = *label;
    r.split = parse_split(f[3]);
    if (has_origin && f.size() >= 6 && f[4] == "upsample_copy") {
      r.origin = Origin::upsample_copy;
      r.source_id = f[5];
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError("no samples found");
  out.manifest = DatasetManifest(std::move(records), SplitMode::bracs_default);
  return out;
}

}  // namespace

LoadedManifest load_manifest(const fs::path& root, ManifestLayout layout, const fs::path& csv_path) {
  if (!fs::is_directory(root)) throw ConfigError("dataset root does not exist: " + root.string());
  return layout == ManifestLayout::bracs_folders ? load_folders(root) : load_csv(root, csv_path);
}

DatasetManifest custom_split(const DatasetManifest& manifest, std::array<double, 3> probs,
                             std::uint64_t seed, ValidationReport* report) {
  if (manifest.empty()) throw ConfigError("custom_split: manifest is empty");
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("custom_split: probabilities must lie in [0,1]");
  }
  if (std::abs(probs[0] + probs[1] + probs[2] - 1.0) > 1e-9) {
    throw ConfigError("custom_split: probabilities must sum to 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SampleRecord> records = manifest.records();
  for (auto& r : records) {
    double u = unit(rng);
    r.split = u < probs[0] ? Split::train : (u < probs[0] + probs[1] ? Split::val : Split::test);
  }
  DatasetManifest out(std::move(records), SplitMode::custom);
  if (report) {
    for (auto s : {Split::train, Split::val, Split::test}) {
      if (out.split_size(s) == 0) report->warn(std::string(split_name(s)), "split is empty after custom_split");
    }
  }
  return out;
}

DatasetManifest upsample(const DatasetManifest& manifest, std::int64_t target_per_class,
                         std::uint64_t seed) {
  if (target_per_class < 1) throw ConfigError("upsample: target_per_class must be positive");
  const auto present = manifest.class_counts();
  const auto train_counts = manifest.class_counts(Split::train);

  std::vector<SampleRecord> records = manifest.records();
  std::mt19937_64 rng(seed);
  for (ClassCode c : kAllClasses) {
    if (!present.contains(c)) continue;
    auto it = train_counts.find(c);
    std::int64_t have = it == train_counts.end() ? 0 : it->second;
    if (have == 0) {
      throw DataError("upsample: class " + std::string(code_name(c)) + " has no train samples");
    }
    if (have >= target_per_class) continue;

    std::vector<std::size_t> originals;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      const auto& r = manifest.records()[i];
      if (r.split == Split::train && r.label == c && r.origin == Origin::original) originals.push_back(i);
    }
    if (originals.empty()) {
      throw DataError("upsample: class " + std::string(code_name(c)) + " has no original train samples");
    }
    std::shuffle(originals.begin(), originals.end(), rng);
    const std::int64_t needed = target_per_class - have;
    for (std::int64_t k = 0; k < needed; ++k) {
      const auto& src = manifest.records()[originals[k % originals.size()]];
      SampleRecord copy = src;
      copy.origin = Origin::upsample_copy;
      copy.source_id = src.id;
      copy.id = src.id + "__up" + std::to_string(k / static_cast<std::int64_t>(originals.size()) + 1);
      records.push_back(std::move(copy));
    }
  }
  return DatasetManifest(std::move(records), manifest.split_mode());
}

void write_manifest_csv(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest CSV: " + path.string());
  out << "id,path,label,split,origin,source_id\n";
  for (const auto& r : manifest.records()) {
    out << csv_field(r.id) << ',' << csv_field(r.image_path.string()) << ',' << code_name(r.label) << ','
        << split_name(r.split) << ',' << (r.origin == Origin::original ? "original" : "upsample_copy") << ','
        << csv_field(r.source_id) << '\n';
  }
}

}  // namespace histo
