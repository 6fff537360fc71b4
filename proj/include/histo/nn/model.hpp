#pragma once

#include <array>
#include <memory>
#include <string>
#include <torch/torch.h>
#include <vector>

#include "histo/model_config.hpp"

namespace histo::nn {

using Stages = std::array<torch::Tensor, 4>;

/// Feature extractor exposing the last four resolution stages, shallow to deep.
struct Backbone : torch::nn::Module {
  virtual Stages forward_stages(const torch::Tensor& x) = 0;
  virtual std::array<int64_t, 4> stage_channels() const = 0;
  /// Global average of the deepest stage.
  torch::Tensor pooled(const torch::Tensor& x) { return forward_stages(x)[3].mean({2, 3}); }
};

std::shared_ptr<Backbone> make_backbone_module(BackboneName name);

struct StageShape {
  int64_t channels = 0, height = 0, width = 0;
};

struct BackboneHandle {
  BackboneName name = BackboneName::resnet50;
  bool pretrained = false;
  std::shared_ptr<Backbone> module;
  std::vector<StageShape> feature_dims;  // four entries at the configured input dims
  int64_t pooled_dim = 0;
};

/// Seeds the initialisation with config.init_seed, loads ImageNet weights when
/// config.pretrained, and records stage shapes by a dry run at input_dims.
BackboneHandle build_backbone(const ModelConfig& config);

/// Stage shapes for an input of the given dims (eval mode, no grad).
std::vector<StageShape> probe_stage_shapes(Backbone& backbone, Dims input);

/// Learned per-position score, softmax over positions, weighted sum.
struct AttentionPoolImpl : torch::nn::Module {
  explicit AttentionPoolImpl(int64_t channels);
  /// Returns pooled (B, C); writes the (B, H*W) weights when requested.
  torch::Tensor forward(const torch::Tensor& x, torch::Tensor* weights = nullptr);
  int64_t channels;
  torch::nn::Conv2d score{nullptr};
};
TORCH_MODULE(AttentionPool);

struct AttentionHeadImpl : torch::nn::Module {
  AttentionHeadImpl(int64_t in_channels, int64_t num_classes, double dropout);
  torch::Tensor forward(const torch::Tensor& features, torch::Tensor* attention = nullptr);
  AttentionPool pool{nullptr};
  torch::nn::Dropout dropout{nullptr};
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(AttentionHead);

struct PyramidHeadImpl : torch::nn::Module {
  PyramidHeadImpl(std::array<int64_t, 4> stage_channels, int64_t width, int64_t num_classes, double dropout);
  torch::Tensor forward(const std::vector<torch::Tensor>& stages, std::vector<torch::Tensor>* attention = nullptr);
  /// Concatenated per-stage vectors (B, 4 * width) before dropout.
  torch::Tensor fuse(const std::vector<torch::Tensor>& stages, std::vector<torch::Tensor>* attention = nullptr);
  int64_t width;
  torch::nn::ModuleList proj{nullptr};
  torch::nn::ModuleList pools{nullptr};
  torch::nn::Dropout dropout{nullptr};
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(PyramidHead);

/// Backbone plus classification head.
struct HistoNetImpl : torch::nn::Module {
  explicit HistoNetImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& x);
  /// Logits plus the attention maps: one (B, HW) map for the attention head,
  /// four for the pyramid head.
  torch::Tensor forward_with_attention(const torch::Tensor& x, std::vector<torch::Tensor>& attention);

  ModelConfig config;
  BackboneHandle backbone;
  AttentionHead attention_head{nullptr};
  PyramidHead pyramid_head{nullptr};
};
TORCH_MODULE(HistoNet);

HistoNet build_model(const ModelConfig& config);

/// Order-sensitive digest of every parameter and buffer.
double parameter_checksum(torch::nn::Module& module);
int64_t parameter_count(torch::nn::Module& module, bool trainable_only = false);

/// Copies tensors from a saved state dict (torch.save of a dict of tensors, or
/// a torch::save archive) into matching parameters and buffers. Keys outside
/// the backbone are ignored; missing or mis-shaped backbone keys throw.
void load_pretrained(Backbone& backbone, const std::string& path);
/// $HISTO_WEIGHTS_DIR/<backbone>.pt unless config.weights_path is set.
std::string pretrained_weights_path(const ModelConfig& config);

/// Parameter counts and per-stage shapes, for the describe subcommand.
std::string describe(const ModelConfig& config);

}  // namespace histo::nn
