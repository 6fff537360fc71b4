#include "histo/tiling.hpp"

#include <cmath>
#include <opencv2/imgproc.hpp>
#include <random>

#include "cv_bridge.hpp"

namespace histo {

ImageBuffer zoomed_source(const ImageBuffer& image, int zoom) {
  if (zoom == 0) return image;
  const int factor = 1 << zoom;
  const int h = image.height() / factor;
  const int w = image.width() / factor;
  if (h < 1 || w < 1) return {};
  // Trim to a multiple of the factor so every output pixel is an exact block mean.
  cv::Mat trimmed = detail::as_mat(image)(cv::Rect(0, 0, w * factor, h * factor));
  cv::Mat out;
  cv::resize(trimmed, out, cv::Size(w, h), 0, 0, cv::INTER_AREA);
  return detail::from_mat(out);
}

namespace {

double mean_luminance(const ImageBuffer& image, int x, int y, int w, int h) {
  double sum = 0.0;
  for (int row = y; row < y + h; ++row) {
    for (int col = x; col < x + w; ++col) sum += luminance(image.at(row, col));
  }
  return sum / (static_cast<double>(w) * h);
}

struct Combo {
  int window;
  int zoom;
};

}  // namespace

TileSet extract_tiles(const ImageBuffer& image, const TileSpec& spec, std::string source_id,
                      ValidationReport* report) {
  if (spec.n_tiles < 1) throw ConfigError("tiling: n_tiles must be at least 1");
  if (spec.zoom_levels < 1) throw ConfigError("tiling: zoom_levels must be at least 1");
  if (spec.window_sizes.empty()) throw ConfigError("tiling: window_sizes is empty");

  std::vector<ImageBuffer> levels;
  for (int z = 0; z < spec.zoom_levels; ++z) levels.push_back(zoomed_source(image, z));

  std::vector<Combo> combos;
  for (int window : spec.window_sizes) {
    if (window < 1) throw ConfigError("tiling: window sizes must be positive");
    for (int z = 0; z < spec.zoom_levels; ++z) {
      const auto& level = levels[z];
      if (!level.empty() && window <= level.height() && window <= level.width()) {
        combos.push_back({window, z});
      } else if (report) {
        report->warn(source_id, "tile window " + std::to_string(window) + " at zoom " + std::to_string(z) +
                                    " does not fit the image; skipped");
      }
    }
  }
  if (combos.empty()) {
    throw DataError("tiling: image " + source_id + " is smaller than every window at every zoom level");
  }

  std::mt19937_64 rng(spec.selection_seed);
  TileSet out;
  out.source_id = std::move(source_id);
  out.tiles.reserve(spec.n_tiles);
  for (int i = 0; i < spec.n_tiles; ++i) {
    const Combo& combo = combos[i % combos.size()];
    const ImageBuffer& level = levels[combo.zoom];
    std::uniform_int_distribution<int> xs(0, level.width() - combo.window);
    std::uniform_int_distribution<int> ys(0, level.height() - combo.window);
    int x = 0, y = 0;
    for (int attempt = 0; attempt < std::max(1, spec.max_attempts); ++attempt) {
      x = xs(rng);
      y = ys(rng);
      if (mean_luminance(level, x, y, combo.window, combo.window) <= spec.background_threshold) break;
    }
    const int factor = 1 << combo.zoom;
    Tile tile;
    tile.pixels = level.crop(x, y, combo.window, combo.window);
    tile.window = combo.window;
    tile.zoom = combo.zoom;
    tile.source_rect = {x * factor, y * factor, combo.window * factor, combo.window * factor};
    out.tiles.push_back(std::move(tile));
  }
  return out;
}

MosaicLayout mosaic_layout(std::size_t n_tiles, Dims canvas) {
  if (n_tiles == 0) throw ConfigError("merge_tiles: empty tile set");
  if (canvas.height < 1 || canvas.width < 1) throw ConfigError("merge_tiles: canvas must be positive");
  MosaicLayout layout;
  layout.grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_tiles))));
  // ceil(sqrt) via floating point can be off by one for perfect squares.
  while (static_cast<std::size_t>(layout.grid - 1) * (layout.grid - 1) >= n_tiles) --layout.grid;
  while (static_cast<std::size_t>(layout.grid) * layout.grid < n_tiles) ++layout.grid;
  const int g = layout.grid;
  layout.cell_height = canvas.height / g;
  layout.cell_width = canvas.width / g;
  if (layout.cell_height < 1 || layout.cell_width < 1) throw ConfigError("merge_tiles: canvas too small for grid");
  for (int row = 0; row < g; ++row) {
    for (int col = 0; col < g; ++col) {
      Rect r{col * layout.cell_width, row * layout.cell_height, layout.cell_width, layout.cell_height};
      if (col == g - 1) r.w = canvas.width - r.x;
      if (row == g - 1) r.h = canvas.height - r.y;
      layout.cells.push_back(r);
    }
  }
  return layout;
}

ImageBuffer merge_tiles(const TileSet& tileset, Dims canvas) {
  const auto layout = mosaic_layout(tileset.tiles.size(), canvas);
  ImageBuffer out(canvas.height, canvas.width, kNeutralGray);
  cv::Mat dst = detail::as_mat(out);
  for (std::size_t i = 0; i < tileset.tiles.size(); ++i) {
    const Rect& cell = layout.cells[i];
    ImageBuffer scaled = resize(tileset.tiles[i].pixels, {cell.h, cell.w});
    detail::as_mat(scaled).copyTo(dst(cv::Rect(cell.x, cell.y, cell.w, cell.h)));
  }
  return out;
}

}  // namespace histo
