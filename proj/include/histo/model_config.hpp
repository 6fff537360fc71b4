#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "histo/preprocess.hpp"

namespace histo {

enum class BackboneName { xception, efficientnet, resnet50, convnexttiny_v2, inception_resnet, linear_probe };
enum class HeadType { attention, pyramid };

/// The five ImageNet architectures. linear_probe is a parameter-free test hook
/// (average-pooled RGB stages) and is accepted by name but not listed here.
inline constexpr BackboneName kPretrainedBackbones[] = {BackboneName::xception, BackboneName::efficientnet,
                                                        BackboneName::resnet50, BackboneName::convnexttiny_v2,
                                                        BackboneName::inception_resnet};

std::string_view backbone_name(BackboneName b);
BackboneName parse_backbone(std::string_view text);  // ConfigError names the valid set
/// Display name used in result tables ("ResNet50", "ConvNextTiny V2", ...).
std::string_view backbone_display_name(BackboneName b);
std::string_view head_name(HeadType h);
HeadType parse_head(std::string_view text);

struct ModelConfig {
  BackboneName backbone = BackboneName::resnet50;
  HeadType head = HeadType::attention;
  double dropout = 0.45;
  int num_classes = 7;
  Dims input_dims{512, 512};
  bool pretrained = false;
  std::string weights_path;      // overrides $HISTO_WEIGHTS_DIR/<backbone>.pt
  int pyramid_width = 256;       // common channel width C of the pyramid head
  std::uint64_t init_seed = 0;

  void validate() const;  // throws ConfigError
};

}  // namespace histo
