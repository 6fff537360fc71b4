#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "histo/error.hpp"
#include "histo/image.hpp"
#include "histo/preprocess.hpp"

namespace histo {

struct TileSpec {
  std::vector<int> window_sizes{128, 256, 512};
  int zoom_levels = 3;
  int n_tiles = 50;
  Dims canvas_dims{1748, 1748};
  std::uint64_t selection_seed = 0;
  double background_threshold = kDefaultBackgroundThreshold;
  int max_attempts = 20;
};

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Tile {
  ImageBuffer pixels;
  int window = 0;
  int zoom = 0;       // the source was downscaled by 2^zoom before cropping
  Rect source_rect;   // in original image coordinates
};

struct TileSet {
  std::vector<Tile> tiles;
  std::string source_id;
};

/// Source image downscaled by 2^zoom (area averaging).
ImageBuffer zoomed_source(const ImageBuffer& image, int zoom);

/// Exactly `spec.n_tiles` tiles, dealt round-robin over the usable
/// (window, zoom) combinations in window-major order. Combinations whose window
/// does not fit the zoomed image are skipped with a warning; throws DataError
/// when none fits.
TileSet extract_tiles(const ImageBuffer& image, const TileSpec& spec, std::string source_id = {},
                      ValidationReport* report = nullptr);

/// Grid geometry used by merge_tiles.
struct MosaicLayout {
  int grid = 0;                  // cells per side: ceil(sqrt(n))
  int cell_height = 0, cell_width = 0;  // floor(canvas / grid)
  std::vector<Rect> cells;       // row-major; the last row/column absorb the remainder
};

MosaicLayout mosaic_layout(std::size_t n_tiles, Dims canvas);

/// Tiles resized into a square grid covering `canvas`, unused cells neutral gray.
ImageBuffer merge_tiles(const TileSet& tileset, Dims canvas);

}  // namespace histo
