#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "histo/manifest.hpp"
#include "histo/model_config.hpp"
#include "histo/preprocess.hpp"
#include "histo/synth.hpp"
#include "histo/tiling.hpp"
#include "histo/train_config.hpp"

namespace histo {

struct DatasetConfig {
  std::filesystem::path root;
  ManifestLayout layout = ManifestLayout::bracs_folders;
  std::filesystem::path csv;  // csv_index only; defaults to root/manifest.csv
  SplitMode split_mode = SplitMode::bracs_default;
  std::array<double, 3> split_probs{0.9, 0.07, 0.03};
  std::uint64_t split_seed = 42;
  std::optional<std::int64_t> upsample_target;
  std::uint64_t upsample_seed = 0;
  std::optional<SynthSpec> synthetic;  // generate into root when root is missing
};

struct PreprocessConfig {
  std::optional<Dims> target_dims;
  bool gray_noise = true;
  double luminance_threshold = kDefaultBackgroundThreshold;
  StainMethod stain = StainMethod::none;
  std::filesystem::path stain_reference;  // image the reference statistics come from
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  PreprocessConfig preprocess;
  std::optional<TileSpec> tiling;
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path run_dir;  // relative paths resolve against the run root

  /// Cross-section checks; throws ConfigError.
  void validate() const;
  /// Spatial size the model sees: preprocess.target_dims, or the tiling canvas.
  Dims model_input_dims() const;
};

/// Strict parse: unknown keys and type mismatches throw ConfigError naming
/// `source` and the dotted field path.
ExperimentConfig parse_config(const std::string& json_text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

/// Model section plus input_dims, as embedded in checkpoints.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig parse_model_config(const std::string& json_text, const std::string& source = "checkpoint");

/// Named configurations for each result-table row plus
/// "synthetic_smoke". Dataset roots are left empty for BRACS presets.
std::vector<std::string> preset_names();
std::optional<ExperimentConfig> preset(const std::string& name);

/// "preset:<name>" or a file path.
ExperimentConfig resolve_config(const std::string& spec);

/// $HISTO_RUN_ROOT, else "runs".
std::filesystem::path run_root();
/// Absolute run directory for a config (run_dir, else <run root>/<name>).
std::filesystem::path resolve_run_dir(const ExperimentConfig& config);

}  // namespace histo
