#include "histo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "histo/error.hpp"
#include "histo/manifest.hpp"

namespace fs = std::filesystem;

namespace histo {

namespace {

struct ClassLook {
  Rgb base;
  double angle;   // stripe orientation, radians
  double period;  // pixels
};

// Base colours are far apart in RGB so class means are linearly separable.
constexpr ClassLook kLooks[kNumClassCodes] = {
    {{220, 120, 160}, 0.0, 16.0},   // N
    {{150, 80, 180}, 0.5, 12.0},    // PB
    {{90, 110, 200}, 1.0, 20.0},    // UDH
    {{200, 170, 90}, 1.5, 10.0},    // FEA
    {{110, 170, 110}, 2.0, 14.0},   // ADH
    {{190, 70, 70}, 2.5, 18.0},     // DCIS
    {{70, 70, 100}, 3.0, 8.0},      // IC
};

}  // namespace

ImageBuffer synth_image(ClassCode label, int index, const SynthSpec& spec) {
  const auto& look = kLooks[index_of(label)];
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index_of(label)), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 8.0);
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  const double jitter = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
  const double ca = std::cos(look.angle), sa = std::sin(look.angle);

  ImageBuffer img(spec.dims.height, spec.dims.width);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double t = 2.0 * std::numbers::pi * (x * ca + y * sa) / look.period + phase;
      const double stripe = 20.0 * std::sin(t) + jitter;
      auto ch = [&](std::uint8_t base) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(base + stripe + noise(rng)), 0L, 255L));
      };
      img.set(y, x, {ch(look.base.r), ch(look.base.g), ch(look.base.b)});
    }
  }
  return img;
}

std::size_t generate_synthetic(const fs::path& out_dir, const SynthSpec& spec) {
  if (spec.classes < 1 || spec.classes > static_cast<int>(kNumClassCodes)) {
    throw ConfigError("synth: classes must be between 1 and 7");
  }
  if (spec.per_class < 1) throw ConfigError("synth: per_class must be positive");
  if (spec.dims.height < 1 || spec.dims.width < 1) throw ConfigError("synth: image dims must be positive");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw ConfigError("synth: cannot create output directory " + out_dir.string());

  const int n = spec.per_class;
  int n_train = static_cast<int>(std::lround(spec.train_fraction * n));
  int n_val = static_cast<int>(std::lround(spec.val_fraction * n));
  if (n >= 3) {
    n_train = std::clamp(n_train, 1, n - 2);
    n_val = std::clamp(n_val, 1, n - n_train - 1);
  } else {
    n_train = n;
    n_val = 0;
  }

  std::size_t written = 0;
  for (int c = 0; c < spec.classes; ++c) {
    const ClassCode label = class_from_index(c);
    for (int k = 0; k < n; ++k) {
      const Split split = k < n_train ? Split::train : (k < n_train + n_val ? Split::val : Split::test);
      const fs::path dir = out_dir / split_name(split) / code_name(label);
      fs::create_directories(dir, ec);
      if (ec) throw ConfigError("synth: cannot create " + dir.string());
      char name[64];
      std::snprintf(name, sizeof name, "synth_%s_%04d.png", std::string(code_name(label)).c_str(), k);
      save_png(synth_image(label, k, spec), dir / name);
      ++written;
    }
  }
  return written;
}

}  // namespace histo
