#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <torch/torch.h>
#include <vector>

#include "histo/batch_mix.hpp"
#include "histo/image.hpp"
#include "histo/manifest.hpp"
#include "histo/metrics.hpp"
#include "histo/model_config.hpp"
#include "histo/nn/model.hpp"
#include "histo/train_config.hpp"

namespace histo::nn {

/// Model-ready (already preprocessed) image for a record index.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual ImageBuffer get(std::size_t record_index) = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean over the epoch's optimizer steps
  double lr = 0.0;          // after the epoch's last step
  std::int64_t steps = 0;
  double val_accuracy = 0.0;
  double val_weighted_f1 = 0.0;
  double val_sensitivity = 0.0;
  double seconds = 0.0;
};

struct RunResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0: the initial model
  double best_val_weighted_f1 = 0.0;
};

struct TrainOutputs {
  std::filesystem::path checkpoint_dir;  // best.pt and last.pt
  std::filesystem::path metrics_log;     // one JSON object per epoch; empty to skip
  std::function<void(const EpochRecord&)> on_epoch;
  int stop_after_epochs = 0;  // > 0: stop early; the LR schedule still spans train.epochs
};

/// Applies process-wide determinism and thread settings from the config.
void configure_runtime(const TrainConfig& config);

RunResult train(const ModelConfig& model_config, const TrainConfig& train_config, const DatasetManifest& manifest,
                ImageSource& images, const TrainOutputs& outputs);

/// (B, 3, H, W) float tensor with ImageNet mean/std normalisation.
torch::Tensor to_input_tensor(const std::vector<ImageBuffer>& images);
torch::Tensor soft_label_tensor(const std::vector<SoftLabel>& labels);
/// Tensor counterpart of mix_images on a normalised (B, 3, H, W) batch.
torch::Tensor apply_mix(const torch::Tensor& images, const MixPlan& plan);

struct Predictions {
  std::vector<int> truth;
  std::vector<int> predicted;
  std::vector<std::size_t> records;
};

Predictions predict(HistoNet& model, const DatasetManifest& manifest, Split split, ImageSource& images,
                    int batch_size);
ConfusionMatrix confusion_of(const Predictions& p, std::size_t num_classes);

struct CheckpointMeta {
  ModelConfig model;
  int epoch = 0;
  double val_weighted_f1 = 0.0;
  std::string extra;  // free-form JSON from the caller
};

/// Writes to a temporary file in the same directory, then renames.
void save_checkpoint(HistoNet& model, const CheckpointMeta& meta, const std::filesystem::path& path);

struct LoadedCheckpoint {
  HistoNet model{nullptr};
  CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace histo::nn
