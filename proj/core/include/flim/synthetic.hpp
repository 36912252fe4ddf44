#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "flim/image_io.hpp"
#include "flim/markers.hpp"

namespace flim {

/// Two-class texture set: class 1 is oriented stripes, class 2 is blobs.
struct SyntheticOptions {
  int tiles_per_class = 100;
  int size = 64;
  int marked_per_class = 2;
  std::uint64_t seed = 0;
};

struct SyntheticTile {
  std::string id;
  int label = 0;
  Raster8 rgb;
};

struct SyntheticDataset {
  std::vector<SyntheticTile> tiles;
  /// Markers for the first `marked_per_class` tiles of each class.
  std::vector<MarkerSet> markers;
};

Raster8 stripes_tile(int size, std::mt19937_64& rng);
Raster8 blobs_tile(int size, std::mt19937_64& rng);

SyntheticDataset make_synthetic(const SyntheticOptions& options);

/// Writes `<dir>/dataset/<label>/<id>.png` and `<dir>/markers/<id>.tsv`.
SyntheticDataset write_synthetic(const std::filesystem::path& dir, const SyntheticOptions& options);

}  // namespace flim
