// Five ImageNet architectures plus a parameter-free probe, each exposing its
// last four resolution stages. Module names follow the reference
// implementations (torchvision for ResNet50 and EfficientNet-B0, the ConvNeXt
// V2 release, timm for Xception and Inception-ResNet-v2) so exported state
// dicts load by name.

#include <cmath>

#include "histo/error.hpp"
#include "histo/nn/model.hpp"

namespace histo::nn {

namespace {

namespace tnn = torch::nn;

// Sequential container whose forward is not a template, so chains nest.
// Children are named "0", "1", ... like torch.nn.Sequential.
struct ChainImpl : tnn::Module {
  ChainImpl() = default;
  template <typename... Ms>
  explicit ChainImpl(Ms&&... ms) {
    (push_back(std::forward<Ms>(ms)), ...);
  }
  template <typename M>
  void push_back(M m) {
    register_module(std::to_string(items.size()), m);
    items.emplace_back(m);
  }
  torch::Tensor forward(torch::Tensor x) {
    for (auto& m : items) x = m.forward(x);
    return x;
  }
  std::size_t size() const { return items.size(); }
  std::vector<tnn::AnyModule> items;
};
TORCH_MODULE(Chain);

tnn::Conv2d conv(int64_t in, int64_t out, int64_t k, int64_t stride = 1, int64_t pad = 0, int64_t groups = 1,
                 bool bias = false) {
  return tnn::Conv2d(tnn::Conv2dOptions(in, out, k).stride(stride).padding(pad).groups(groups).bias(bias));
}

tnn::BatchNorm2d bn(int64_t c, double eps = 1e-5, double momentum = 0.1) {
  return tnn::BatchNorm2d(tnn::BatchNorm2dOptions(c).eps(eps).momentum(momentum));
}

void kaiming_init(tnn::Module& m) {
  for (auto& sub : m.modules(/*include_self=*/false)) {
    if (auto* c = sub->as<tnn::Conv2d>()) {
      tnn::init::kaiming_normal_(c->weight, 0.0, torch::kFanOut, torch::kReLU);
      if (c->bias.defined()) tnn::init::zeros_(c->bias);
    } else if (auto* b = sub->as<tnn::BatchNorm2d>()) {
      tnn::init::ones_(b->weight);
      tnn::init::zeros_(b->bias);
    }
  }
}

// ---------------------------------------------------------------- ResNet50

struct BottleneckImpl : tnn::Module {
  BottleneckImpl(int64_t in, int64_t width, int64_t stride) {
    const int64_t out = width * 4;
    conv1 = register_module("conv1", conv(in, width, 1));
    bn1 = register_module("bn1", bn(width));
    conv2 = register_module("conv2", conv(width, width, 3, stride, 1));
    bn2 = register_module("bn2", bn(width));
    conv3 = register_module("conv3", conv(width, out, 1));
    bn3 = register_module("bn3", bn(out));
    if (stride != 1 || in != out) {
      downsample = register_module("downsample", Chain(conv(in, out, 1, stride), bn(out)));
    }
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = torch::relu(bn2(conv2(y)));
    y = bn3(conv3(y));
    return torch::relu(y + (downsample ? downsample->forward(x) : x));
  }
  tnn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
  tnn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
  Chain downsample{nullptr};
};
TORCH_MODULE(Bottleneck);

struct ResNet50 : Backbone {
  ResNet50() {
    conv1 = register_module("conv1", conv(3, 64, 7, 2, 3));
    bn1 = register_module("bn1", bn(64));
    int64_t in = 64;
    const int64_t widths[4] = {64, 128, 256, 512};
    const int blocks[4] = {3, 4, 6, 3};
    for (int s = 0; s < 4; ++s) {
      Chain layer;
      for (int b = 0; b < blocks[s]; ++b) {
        layer->push_back(Bottleneck(in, widths[s], (b == 0 && s > 0) ? 2 : 1));
        in = widths[s] * 4;
      }
      layers[s] = register_module("layer" + std::to_string(s + 1), layer);
    }
    kaiming_init(*this);
  }
  Stages forward_stages(const torch::Tensor& x) override {
    auto y = torch::max_pool2d(torch::relu(bn1(conv1(x))), 3, 2, 1);
    Stages out;
    for (int s = 0; s < 4; ++s) out[s] = y = layers[s]->forward(y);
    return out;
  }
  std::array<int64_t, 4> stage_channels() const override { return {256, 512, 1024, 2048}; }
  tnn::Conv2d conv1{nullptr};
  tnn::BatchNorm2d bn1{nullptr};
  std::array<Chain, 4> layers{nullptr, nullptr, nullptr, nullptr};
};

// ---------------------------------------------------------- EfficientNet-B0

Chain conv_norm_act(int64_t in, int64_t out, int64_t k, int64_t stride = 1, int64_t groups = 1,
                              bool act = true) {
  Chain s(conv(in, out, k, stride, (k - 1) / 2, groups), bn(out));
  if (act) s->push_back(tnn::SiLU());
  return s;
}

struct SqueezeExcitationImpl : tnn::Module {
  SqueezeExcitationImpl(int64_t channels, int64_t squeeze) {
    fc1 = register_module("fc1", conv(channels, squeeze, 1, 1, 0, 1, true));
    fc2 = register_module("fc2", conv(squeeze, channels, 1, 1, 0, 1, true));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto s = torch::adaptive_avg_pool2d(x, {1, 1});
    s = torch::sigmoid(fc2(torch::silu(fc1(s))));
    return x * s;
  }
  tnn::Conv2d fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(SqueezeExcitation);

struct MBConvImpl : tnn::Module {
  MBConvImpl(int64_t in, int64_t out, int64_t expand, int64_t k, int64_t stride)
      : residual(stride == 1 && in == out) {
    const int64_t hidden = in * expand;
    Chain b;
    if (expand != 1) b->push_back(conv_norm_act(in, hidden, 1));
    b->push_back(conv_norm_act(hidden, hidden, k, stride, hidden));
    b->push_back(SqueezeExcitation(hidden, std::max<int64_t>(1, in / 4)));
    b->push_back(conv_norm_act(hidden, out, 1, 1, 1, /*act=*/false));
    block = register_module("block", b);
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = block->forward(x);
    return residual ? y + x : y;
  }
  bool residual;
  Chain block{nullptr};
};
TORCH_MODULE(MBConv);

struct EfficientNetB0 : Backbone {
  EfficientNetB0() {
    struct StageCfg {
      int64_t expand, k, stride, in, out, layers;
    };
    const StageCfg cfg[7] = {{1, 3, 1, 32, 16, 1},  {6, 3, 2, 16, 24, 2},  {6, 5, 2, 24, 40, 2},
                             {6, 3, 2, 40, 80, 3},  {6, 5, 1, 80, 112, 3}, {6, 5, 2, 112, 192, 4},
                             {6, 3, 1, 192, 320, 1}};
    features = Chain();
    features->push_back(conv_norm_act(3, 32, 3, 2));
    for (const auto& c : cfg) {
      Chain stage;
      for (int64_t i = 0; i < c.layers; ++i) {
        stage->push_back(MBConv(i == 0 ? c.in : c.out, c.out, c.expand, c.k, i == 0 ? c.stride : 1));
      }
      features->push_back(stage);
    }
    features->push_back(conv_norm_act(320, 1280, 1));
    register_module("features", features);
    kaiming_init(*this);
  }
  Stages forward_stages(const torch::Tensor& x) override {
    // Taps after features[2] (/4), [3] (/8), [5] (/16) and the head conv [8] (/32).
    Stages out;
    auto y = x;
    for (size_t i = 0; i < features->size(); ++i) {
      y = features->items[i].forward(y);
      if (i == 2) out[0] = y;
      if (i == 3) out[1] = y;
      if (i == 5) out[2] = y;
    }
    out[3] = y;
    return out;
  }
  std::array<int64_t, 4> stage_channels() const override { return {24, 40, 112, 1280}; }
  Chain features{nullptr};
};

// ---------------------------------------------------------- ConvNeXt V2 Tiny

struct LayerNorm2dImpl : tnn::Module {
  explicit LayerNorm2dImpl(int64_t c) {
    weight = register_parameter("weight", torch::ones({c}));
    bias = register_parameter("bias", torch::zeros({c}));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto mean = x.mean(1, true);
    auto var = (x - mean).pow(2).mean(1, true);
    x = (x - mean) / torch::sqrt(var + 1e-6);
    return weight.view({1, -1, 1, 1}) * x + bias.view({1, -1, 1, 1});
  }
  torch::Tensor weight, bias;
};
TORCH_MODULE(LayerNorm2d);

struct GRNImpl : tnn::Module {
  explicit GRNImpl(int64_t dim) {
    gamma = register_parameter("gamma", torch::zeros({1, 1, 1, dim}));
    beta = register_parameter("beta", torch::zeros({1, 1, 1, dim}));
  }
  torch::Tensor forward(torch::Tensor x) {  // channels last
    auto gx = torch::sqrt(x.pow(2).sum({1, 2}, true));
    auto nx = gx / (gx.mean(-1, true) + 1e-6);
    return gamma * (x * nx) + beta + x;
  }
  torch::Tensor gamma, beta;
};
TORCH_MODULE(GRN);

struct ConvNeXtBlockImpl : tnn::Module {
  explicit ConvNeXtBlockImpl(int64_t dim) {
    dwconv = register_module("dwconv", conv(dim, dim, 7, 1, 3, dim, true));
    norm = register_module("norm", tnn::LayerNorm(tnn::LayerNormOptions({dim}).eps(1e-6)));
    pwconv1 = register_module("pwconv1", tnn::Linear(dim, 4 * dim));
    grn = register_module("grn", GRN(4 * dim));
    pwconv2 = register_module("pwconv2", tnn::Linear(4 * dim, dim));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = dwconv(x).permute({0, 2, 3, 1});
    y = pwconv2(grn(torch::gelu(pwconv1(norm(y)))));
    return x + y.permute({0, 3, 1, 2});
  }
  tnn::Conv2d dwconv{nullptr};
  tnn::LayerNorm norm{nullptr};
  tnn::Linear pwconv1{nullptr}, pwconv2{nullptr};
  GRN grn{nullptr};
};
TORCH_MODULE(ConvNeXtBlock);

struct ConvNeXtV2Tiny : Backbone {
  ConvNeXtV2Tiny() {
    const int64_t dims[4] = {96, 192, 384, 768};
    const int depths[4] = {3, 3, 9, 3};
    downsample_layers = tnn::ModuleList();
    stages = tnn::ModuleList();
    downsample_layers->push_back(Chain(conv(3, dims[0], 4, 4, 0, 1, true), LayerNorm2d(dims[0])));
    for (int i = 1; i < 4; ++i) {
      downsample_layers->push_back(Chain(LayerNorm2d(dims[i - 1]), conv(dims[i - 1], dims[i], 2, 2, 0, 1, true)));
    }
    for (int i = 0; i < 4; ++i) {
      Chain s;
      for (int j = 0; j < depths[i]; ++j) s->push_back(ConvNeXtBlock(dims[i]));
      stages->push_back(s);
    }
    register_module("downsample_layers", downsample_layers);
    register_module("stages", stages);
    for (auto& p : named_parameters()) {
      const auto& name = p.key();
      if (name.find("grn") != std::string::npos || name.find("norm") != std::string::npos) continue;
      if (p.value().dim() >= 2) {
        torch::NoGradGuard g;
        p.value().normal_(0.0, 0.02).clamp_(-2.0, 2.0);
      } else if (name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0) {
        tnn::init::zeros_(p.value());
      }
    }
  }
  Stages forward_stages(const torch::Tensor& x) override {
    Stages out;
    auto y = x;
    for (int i = 0; i < 4; ++i) {
      y = downsample_layers[i]->as<ChainImpl>()->forward(y);
      out[i] = y = stages[i]->as<ChainImpl>()->forward(y);
    }
    return out;
  }
  std::array<int64_t, 4> stage_channels() const override { return {96, 192, 384, 768}; }
  tnn::ModuleList downsample_layers{nullptr}, stages{nullptr};
};

// ----------------------------------------------------------------- Xception

struct SeparableConvImpl : tnn::Module {
  SeparableConvImpl(int64_t in, int64_t out) {
    conv1 = register_module("conv1", conv(in, in, 3, 1, 1, in));
    pointwise = register_module("pointwise", conv(in, out, 1));
  }
  torch::Tensor forward(torch::Tensor x) { return pointwise(conv1(x)); }
  tnn::Conv2d conv1{nullptr}, pointwise{nullptr};
};
TORCH_MODULE(SeparableConv);

struct XceptionBlockImpl : tnn::Module {
  XceptionBlockImpl(int64_t in, int64_t out, int reps, int64_t stride, bool start_with_relu, bool grow_first) {
    if (out != in || stride != 1) {
      skip = register_module("skip", conv(in, out, 1, stride));
      skipbn = register_module("skipbn", bn(out));
    }
    Chain r;
    int64_t ch = in;
    for (int i = 0; i < reps; ++i) {
      const int64_t target = (grow_first ? i == 0 : i == reps - 1) ? out : ch;
      if (i > 0 || start_with_relu) r->push_back(tnn::ReLU());
      r->push_back(SeparableConv(ch, target));
      r->push_back(bn(target));
      ch = target;
    }
    if (stride != 1) r->push_back(tnn::MaxPool2d(tnn::MaxPool2dOptions(3).stride(stride).padding(1)));
    rep = register_module("rep", r);
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = rep->forward(x);
    return y + (skip ? skipbn(skip(x)) : x);
  }
  Chain rep{nullptr};
  tnn::Conv2d skip{nullptr};
  tnn::BatchNorm2d skipbn{nullptr};
};
TORCH_MODULE(XceptionBlock);

struct Xception : Backbone {
  Xception() {
    conv1 = register_module("conv1", conv(3, 32, 3, 2, 0));
    bn1 = register_module("bn1", bn(32));
    conv2 = register_module("conv2", conv(32, 64, 3, 1, 0));
    bn2 = register_module("bn2", bn(64));
    block1 = register_module("block1", XceptionBlock(64, 128, 2, 2, false, true));
    block2 = register_module("block2", XceptionBlock(128, 256, 2, 2, true, true));
    block3 = register_module("block3", XceptionBlock(256, 728, 2, 2, true, true));
    for (int i = 0; i < 8; ++i) {
      middle[i] = register_module("block" + std::to_string(i + 4), XceptionBlock(728, 728, 3, 1, true, true));
    }
    block12 = register_module("block12", XceptionBlock(728, 1024, 2, 2, true, false));
    conv3 = register_module("conv3", SeparableConv(1024, 1536));
    bn3 = register_module("bn3", bn(1536));
    conv4 = register_module("conv4", SeparableConv(1536, 2048));
    bn4 = register_module("bn4", bn(2048));
    kaiming_init(*this);
  }
  Stages forward_stages(const torch::Tensor& x) override {
    auto y = torch::relu(bn1(conv1(x)));
    y = torch::relu(bn2(conv2(y)));
    Stages out;
    out[0] = y = block1(y);
    out[1] = y = block2(y);
    y = block3(y);
    for (auto& b : middle) y = b(y);
    out[2] = y;
    y = torch::relu(bn3(conv3(block12(y))));
    out[3] = torch::relu(bn4(conv4(y)));
    return out;
  }
  std::array<int64_t, 4> stage_channels() const override { return {128, 256, 728, 2048}; }
  tnn::Conv2d conv1{nullptr}, conv2{nullptr};
  tnn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr}, bn4{nullptr};
  XceptionBlock block1{nullptr}, block2{nullptr}, block3{nullptr}, block12{nullptr};
  std::array<XceptionBlock, 8> middle{nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr};
  SeparableConv conv3{nullptr}, conv4{nullptr};
};

// ------------------------------------------------------- Inception-ResNet-v2

struct BasicConvImpl : tnn::Module {
  BasicConvImpl(int64_t in, int64_t out, std::array<int64_t, 2> k, int64_t stride = 1,
                std::array<int64_t, 2> pad = {0, 0}) {
    conv = register_module("conv", tnn::Conv2d(tnn::Conv2dOptions(in, out, {k[0], k[1]})
                                                   .stride(stride)
                                                   .padding({pad[0], pad[1]})
                                                   .bias(false)));
    bn = register_module("bn", tnn::BatchNorm2d(tnn::BatchNorm2dOptions(out).eps(1e-3)));
  }
  torch::Tensor forward(torch::Tensor x) { return torch::relu(bn(conv(x))); }
  tnn::Conv2d conv{nullptr};
  tnn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(BasicConv);

BasicConv bc(int64_t in, int64_t out, int64_t k, int64_t stride = 1, int64_t pad = 0) {
  return BasicConv(in, out, std::array<int64_t, 2>{k, k}, stride, std::array<int64_t, 2>{pad, pad});
}

struct Mixed5bImpl : tnn::Module {
  Mixed5bImpl() {
    branch0 = register_module("branch0", bc(192, 96, 1));
    branch1 = register_module("branch1", Chain(bc(192, 48, 1), bc(48, 64, 5, 1, 2)));
    branch2 = register_module("branch2", Chain(bc(192, 64, 1), bc(64, 96, 3, 1, 1), bc(96, 96, 3, 1, 1)));
    branch3 = register_module(
        "branch3", Chain(tnn::AvgPool2d(tnn::AvgPool2dOptions(3).stride(1).padding(1).count_include_pad(false)),
                         bc(192, 64, 1)));
  }
  torch::Tensor forward(torch::Tensor x) {
    return torch::cat({branch0(x), branch1->forward(x), branch2->forward(x), branch3->forward(x)}, 1);
  }
  BasicConv branch0{nullptr};
  Chain branch1{nullptr}, branch2{nullptr}, branch3{nullptr};
};
TORCH_MODULE(Mixed5b);

struct Block35Impl : tnn::Module {
  explicit Block35Impl(double scale) : scale(scale) {
    branch0 = register_module("branch0", bc(320, 32, 1));
    branch1 = register_module("branch1", Chain(bc(320, 32, 1), bc(32, 32, 3, 1, 1)));
    branch2 = register_module("branch2", Chain(bc(320, 32, 1), bc(32, 48, 3, 1, 1), bc(48, 64, 3, 1, 1)));
    conv2d = register_module("conv2d", conv(128, 320, 1, 1, 0, 1, true));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = conv2d(torch::cat({branch0(x), branch1->forward(x), branch2->forward(x)}, 1));
    return torch::relu(x + scale * y);
  }
  double scale;
  BasicConv branch0{nullptr};
  Chain branch1{nullptr}, branch2{nullptr};
  tnn::Conv2d conv2d{nullptr};
};
TORCH_MODULE(Block35);

struct Mixed6aImpl : tnn::Module {
  Mixed6aImpl() {
    branch0 = register_module("branch0", bc(320, 384, 3, 2));
    branch1 = register_module("branch1", Chain(bc(320, 256, 1), bc(256, 256, 3, 1, 1), bc(256, 384, 3, 2)));
  }
  torch::Tensor forward(torch::Tensor x) {
    return torch::cat({branch0(x), branch1->forward(x), torch::max_pool2d(x, 3, 2)}, 1);
  }
  BasicConv branch0{nullptr};
  Chain branch1{nullptr};
};
TORCH_MODULE(Mixed6a);

struct Block17Impl : tnn::Module {
  explicit Block17Impl(double scale) : scale(scale) {
    branch0 = register_module("branch0", bc(1088, 192, 1));
    branch1 = register_module("branch1", Chain(bc(1088, 128, 1), BasicConv(128, 160, std::array<int64_t, 2>{1, 7}, 1, std::array<int64_t, 2>{0, 3}),
                                                         BasicConv(160, 192, std::array<int64_t, 2>{7, 1}, 1, std::array<int64_t, 2>{3, 0})));
    conv2d = register_module("conv2d", conv(384, 1088, 1, 1, 0, 1, true));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = conv2d(torch::cat({branch0(x), branch1->forward(x)}, 1));
    return torch::relu(x + scale * y);
  }
  double scale;
  BasicConv branch0{nullptr};
  Chain branch1{nullptr};
  tnn::Conv2d conv2d{nullptr};
};
TORCH_MODULE(Block17);

struct Mixed7aImpl : tnn::Module {
  Mixed7aImpl() {
    branch0 = register_module("branch0", Chain(bc(1088, 256, 1), bc(256, 384, 3, 2)));
    branch1 = register_module("branch1", Chain(bc(1088, 256, 1), bc(256, 288, 3, 2)));
    branch2 = register_module("branch2", Chain(bc(1088, 256, 1), bc(256, 288, 3, 1, 1), bc(288, 320, 3, 2)));
  }
  torch::Tensor forward(torch::Tensor x) {
    return torch::cat({branch0->forward(x), branch1->forward(x), branch2->forward(x), torch::max_pool2d(x, 3, 2)}, 1);
  }
  Chain branch0{nullptr}, branch1{nullptr}, branch2{nullptr};
};
TORCH_MODULE(Mixed7a);

struct Block8Impl : tnn::Module {
  Block8Impl(double scale, bool no_relu) : scale(scale), no_relu(no_relu) {
    branch0 = register_module("branch0", bc(2080, 192, 1));
    branch1 = register_module("branch1", Chain(bc(2080, 192, 1), BasicConv(192, 224, std::array<int64_t, 2>{1, 3}, 1, std::array<int64_t, 2>{0, 1}),
                                                         BasicConv(224, 256, std::array<int64_t, 2>{3, 1}, 1, std::array<int64_t, 2>{1, 0})));
    conv2d = register_module("conv2d", conv(448, 2080, 1, 1, 0, 1, true));
  }
  torch::Tensor forward(torch::Tensor x) {
    auto y = x + scale * conv2d(torch::cat({branch0(x), branch1->forward(x)}, 1));
    return no_relu ? y : torch::relu(y);
  }
  double scale;
  bool no_relu;
  BasicConv branch0{nullptr};
  Chain branch1{nullptr};
  tnn::Conv2d conv2d{nullptr};
};
TORCH_MODULE(Block8);

struct InceptionResNetV2 : Backbone {
  InceptionResNetV2() {
    conv2d_1a = register_module("conv2d_1a", bc(3, 32, 3, 2));
    conv2d_2a = register_module("conv2d_2a", bc(32, 32, 3));
    conv2d_2b = register_module("conv2d_2b", bc(32, 64, 3, 1, 1));
    conv2d_3b = register_module("conv2d_3b", bc(64, 80, 1));
    conv2d_4a = register_module("conv2d_4a", bc(80, 192, 3));
    mixed_5b = register_module("mixed_5b", Mixed5b());
    repeat = Chain();
    for (int i = 0; i < 10; ++i) repeat->push_back(Block35(0.17));
    register_module("repeat", repeat);
    mixed_6a = register_module("mixed_6a", Mixed6a());
    repeat_1 = Chain();
    for (int i = 0; i < 20; ++i) repeat_1->push_back(Block17(0.10));
    register_module("repeat_1", repeat_1);
    mixed_7a = register_module("mixed_7a", Mixed7a());
    repeat_2 = Chain();
    for (int i = 0; i < 9; ++i) repeat_2->push_back(Block8(0.20, false));
    register_module("repeat_2", repeat_2);
    block8 = register_module("block8", Block8(1.0, true));
    conv2d_7b = register_module("conv2d_7b", bc(2080, 1536, 1));
    kaiming_init(*this);
  }
  Stages forward_stages(const torch::Tensor& x) override {
    auto y = conv2d_2b(conv2d_2a(conv2d_1a(x)));
    y = torch::max_pool2d(y, 3, 2);
    Stages out;
    out[0] = y = conv2d_4a(conv2d_3b(y));
    y = torch::max_pool2d(y, 3, 2);
    out[1] = y = repeat->forward(mixed_5b(y));
    out[2] = y = repeat_1->forward(mixed_6a(y));
    y = block8(repeat_2->forward(mixed_7a(y)));
    out[3] = conv2d_7b(y);
    return out;
  }
  std::array<int64_t, 4> stage_channels() const override { return {192, 320, 1088, 1536}; }
  BasicConv conv2d_1a{nullptr}, conv2d_2a{nullptr}, conv2d_2b{nullptr}, conv2d_3b{nullptr}, conv2d_4a{nullptr},
      conv2d_7b{nullptr};
  Mixed5b mixed_5b{nullptr};
  Mixed6a mixed_6a{nullptr};
  Mixed7a mixed_7a{nullptr};
  Chain repeat{nullptr}, repeat_1{nullptr}, repeat_2{nullptr};
  Block8 block8{nullptr};
};

// -------------------------------------------------------------- linear probe

struct LinearProbe : Backbone {
  Stages forward_stages(const torch::Tensor& x) override {
    Stages out;
    const int64_t h = x.size(2), w = x.size(3);
    for (int s = 0; s < 4; ++s) {
      const int64_t f = int64_t{4} << s;
      out[s] = torch::adaptive_avg_pool2d(x, {std::max<int64_t>(1, h / f), std::max<int64_t>(1, w / f)});
    }
    return out;
  }
  std::array<int64_t, 4> stage_channels() const override { return {3, 3, 3, 3}; }
};

}  // namespace

std::shared_ptr<Backbone> make_backbone_module(BackboneName name) {
  switch (name) {
    case BackboneName::resnet50:
      return std::make_shared<ResNet50>();
    case BackboneName::efficientnet:
      return std::make_shared<EfficientNetB0>();
    case BackboneName::convnexttiny_v2:
      return std::make_shared<ConvNeXtV2Tiny>();
    case BackboneName::xception:
      return std::make_shared<Xception>();
    case BackboneName::inception_resnet:
      return std::make_shared<InceptionResNetV2>();
    case BackboneName::linear_probe:
      return std::make_shared<LinearProbe>();
  }
  throw ConfigError("unknown backbone");
}

std::vector<StageShape> probe_stage_shapes(Backbone& backbone, Dims input) {
  torch::NoGradGuard no_grad;
  const bool was_training = backbone.is_training();
  backbone.eval();
  const auto stages = backbone.forward_stages(torch::zeros({1, 3, input.height, input.width}));
  backbone.train(was_training);
  std::vector<StageShape> shapes;
  for (const auto& s : stages) shapes.push_back({s.size(1), s.size(2), s.size(3)});
  return shapes;
}

BackboneHandle build_backbone(const ModelConfig& config) {
  torch::manual_seed(config.init_seed);
  BackboneHandle h;
  h.name = config.backbone;
  h.pretrained = config.pretrained;
  h.module = make_backbone_module(config.backbone);
  if (config.pretrained && config.backbone != BackboneName::linear_probe) {
    load_pretrained(*h.module, pretrained_weights_path(config));
  }
  h.feature_dims = probe_stage_shapes(*h.module, config.input_dims);
  h.pooled_dim = h.module->stage_channels()[3];
  return h;
}

}  // namespace histo::nn
