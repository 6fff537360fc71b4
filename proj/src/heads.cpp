#include <sstream>

#include "histo/error.hpp"
#include "histo/nn/model.hpp"

namespace histo::nn {

namespace tnn = torch::nn;

namespace {

[[noreturn]] void channel_mismatch(const char* who, int64_t expected, const torch::Tensor& x) {
  std::ostringstream msg;
  msg << who << ": expected (B, " << expected << ", H, W) features, got " << x.sizes();
  throw ConfigError(msg.str());
}

}  // namespace

AttentionPoolImpl::AttentionPoolImpl(int64_t c) : channels(c) {
  score = register_module("score", tnn::Conv2d(tnn::Conv2dOptions(c, 1, 1)));
}

torch::Tensor AttentionPoolImpl::forward(const torch::Tensor& x, torch::Tensor* weights) {
  if (x.dim() != 4 || x.size(1) != channels) channel_mismatch("attention pool", channels, x);
  const auto w = torch::softmax(score(x).flatten(2), -1);      // (B, 1, HW)
  const auto pooled = torch::bmm(x.flatten(2), w.transpose(1, 2)).squeeze(-1);  // (B, C)
  if (weights) *weights = w.squeeze(1);
  return pooled;
}

AttentionHeadImpl::AttentionHeadImpl(int64_t in_channels, int64_t num_classes, double p) {
  pool = register_module("pool", AttentionPool(in_channels));
  dropout = register_module("dropout", tnn::Dropout(p));
  fc = register_module("fc", tnn::Linear(in_channels, num_classes));
}

torch::Tensor AttentionHeadImpl::forward(const torch::Tensor& features, torch::Tensor* attention) {
  return fc(dropout(pool(features, attention)));
}

PyramidHeadImpl::PyramidHeadImpl(std::array<int64_t, 4> stage_channels, int64_t w, int64_t num_classes, double p)
    : width(w) {
  proj = register_module("proj", tnn::ModuleList());
  pools = register_module("pools", tnn::ModuleList());
  for (int64_t c : stage_channels) {
    proj->push_back(tnn::Conv2d(tnn::Conv2dOptions(c, w, 1)));
    pools->push_back(AttentionPool(w));
  }
  dropout = register_module("dropout", tnn::Dropout(p));
  fc = register_module("fc", tnn::Linear(4 * w, num_classes));
}

torch::Tensor PyramidHeadImpl::fuse(const std::vector<torch::Tensor>& stages, std::vector<torch::Tensor>* attention) {
  if (stages.size() != 4) {
    throw ConfigError("pyramid head: expected 4 stage activations, got " + std::to_string(stages.size()));
  }
  std::vector<torch::Tensor> parts;
  if (attention) attention->clear();
  for (std::size_t i = 0; i < 4; ++i) {
    auto* conv = proj[i]->as<tnn::Conv2dImpl>();
    const int64_t expected = conv->options.in_channels();
    if (stages[i].dim() != 4 || stages[i].size(1) != expected) channel_mismatch("pyramid head", expected, stages[i]);
    torch::Tensor w;
    parts.push_back(pools[i]->as<AttentionPoolImpl>()->forward(conv->forward(stages[i]), attention ? &w : nullptr));
    if (attention) attention->push_back(w);
  }
  return torch::cat(parts, 1);
}

torch::Tensor PyramidHeadImpl::forward(const std::vector<torch::Tensor>& stages, std::vector<torch::Tensor>* attention) {
  return fc(dropout(fuse(stages, attention)));
}

}  // namespace histo::nn
