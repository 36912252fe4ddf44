#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flim/dataset.hpp"
#include "flim/image_io.hpp"
#include "flim/matrix.hpp"
#include "flim/network.hpp"

namespace flim {

/// Feature vectors of a list of images, one row per id.
struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<int> labels;
  Matrix<float> features;
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Loads and normalizes the listed images in order. Throws ValidationError
/// for ids missing from the dataset.
std::vector<Image> load_images(const DatasetIndex& dataset, std::span<const std::string> ids,
                               const BandRanges& ranges = {});

/// Runs the network over the listed images; parallel over images.
FeatureSet extract_feature_set(const DatasetIndex& dataset, std::span<const std::string> ids,
                               const NetworkModel& model, const BandRanges& ranges = {});

/// Flattened normalized input images, the vectors used for input projections.
FeatureSet raw_feature_set(const DatasetIndex& dataset, std::span<const std::string> ids,
                           const BandRanges& ranges = {});

/// `dir/features.bin` (magic "FLIMFEA1": rows, cols, then row-major f32) and
/// `dir/manifest.tsv` with `id<TAB>label` lines in row order.
void save_feature_set(const std::filesystem::path& dir, const FeatureSet& set);
/// Throws IoError, FormatError, or ParseError.
FeatureSet load_feature_set(const std::filesystem::path& dir);

}  // namespace flim
