#pragma once

#include <cstdint>
#include <filesystem>

#include "histo/image.hpp"
#include "histo/labels.hpp"
#include "histo/preprocess.hpp"

namespace histo {

struct SynthSpec {
  int classes = 7;      // the first `classes` codes in ClassCode order
  int per_class = 50;
  Dims dims{128, 128};
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double val_fraction = 0.15;  // the remainder goes to test
};

/// One image: a class-specific base colour and stripe texture, plus noise.
ImageBuffer synth_image(ClassCode label, int index, const SynthSpec& spec);

/// Writes out_dir/{train,val,test}/<code>/synth_<code>_<n>.png.
/// Returns the number of images written.
std::size_t generate_synthetic(const std::filesystem::path& out_dir, const SynthSpec& spec);

}  // namespace histo
