#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <list>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "histo/config.hpp"
#include "histo/metrics.hpp"
#include "histo/nn/train.hpp"
#include "histo/report.hpp"

namespace histo::nn {

struct PreparedData {
  DatasetManifest manifest;
  ValidationReport report;
  std::optional<StainStats> stain_reference;
  std::filesystem::path stain_reference_source;
};

/// Manifest, optional synthetic generation, split, upsampling and the stain
/// reference, as configured.
PreparedData prepare_data(const ExperimentConfig& config);

/// Loads record images and applies preprocessing or tiling + mosaic. Results
/// are cached by image path (upsample copies share an entry) up to a byte budget.
class PipelineImageSource : public ImageSource {
 public:
  PipelineImageSource(const ExperimentConfig& config, const PreparedData& data,
                      std::size_t cache_bytes = default_cache_bytes());
  ImageBuffer get(std::size_t record_index) override;
  /// $HISTO_CACHE_MB megabytes, default 2048.
  static std::size_t default_cache_bytes();

 private:
  ImageBuffer load(std::size_t record_index);

  const ExperimentConfig& config_;
  const PreparedData& data_;
  PreprocessSpec spec_;
  std::size_t budget_;
  std::size_t used_ = 0;
  std::list<std::string> lru_;
  struct Entry {
    ImageBuffer image;
    std::list<std::string>::iterator pos;
  };
  std::unordered_map<std::string, Entry> cache_;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides train.seed
  std::optional<std::filesystem::path> run_dir;
  int dump_augmented = 0;  // write this many augmented train samples to run_dir/augmented
  bool resume = false;     // a completed run is returned as is
  bool force = false;      // an existing run directory is cleared first
  std::ostream* log = nullptr;
};

struct EvaluationResult {
  Split split = Split::test;
  ConfusionMatrix confusion;
  MetricsReport metrics;
  ReportRow row;
};

struct ExperimentResult {
  std::filesystem::path run_dir;
  bool reused = false;  // resumed from a completed run
  RunResult training;
  EvaluationResult evaluation;
};

/// File names inside a run directory.
namespace run_files {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kManifest = "manifest.csv";
inline constexpr const char* kWarnings = "warnings.txt";
inline constexpr const char* kMetricsLog = "metrics.jsonl";
inline constexpr const char* kCheckpoints = "checkpoints";
inline constexpr const char* kReport = "report";
inline constexpr const char* kDone = "DONE";
inline constexpr const char* kFailed = "FAILED";
}  // namespace run_files

/// Applies options to the config (seed, run dir) without running anything.
ExperimentConfig effective_config(ExperimentConfig config, const RunOptions& options);

/// Full pipeline into the run directory. Any failure leaves a FAILED marker
/// holding the error message, then rethrows.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Re-evaluates a run's best checkpoint on `split` (default: test, or val when
/// test is empty) and rewrites its report.
EvaluationResult evaluate_run(const std::filesystem::path& run_dir, std::optional<Split> split = std::nullopt,
                              std::ostream* log = nullptr);

/// Comparison-table row: display model name, size, augmentation, dropout, loss, scores.
ReportRow report_row(const ExperimentConfig& config, const MetricsReport& metrics);

/// Collects the report rows of completed runs and writes table.csv and
/// table.md into `out_dir`. Returns the table.
ComparisonTable report_runs(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

/// Writes up to `n` augmented train samples as PNGs.
void dump_augmented(const ExperimentConfig& config, const PreparedData& data, ImageSource& images, int n,
                    const std::filesystem::path& out_dir);

}  // namespace histo::nn
