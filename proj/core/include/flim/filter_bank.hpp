#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flim/kmeans.hpp"
#include "flim/patches.hpp"

namespace flim {

/// Lower bound applied componentwise to marker standard deviations.
inline constexpr float kStdFloor = 1e-4f;

/// Componentwise mean and population standard deviation over all marker
/// patches (marker-based batch normalization).
struct MarkerStats {
  std::vector<float> mean;
  std::vector<float> std;
  /// Number of components whose deviation was raised to kStdFloor.
  std::size_t floored = 0;

  std::size_t dimension() const noexcept { return mean.size(); }
  /// out = (patch - mean) / std
  void standardize(std::span<const float> patch, std::span<float> out) const;

  friend bool operator==(const MarkerStats&, const MarkerStats&) = default;
};

/// Throws TooFewPatchesError for fewer than two patches.
MarkerStats compute_marker_stats(std::span<const std::span<const float>> patches);

/// Unit-norm filters of one convolutional layer, each tagged with the class
/// whose markers produced it, plus the marker statistics applied before
/// convolution.
struct FilterBank {
  int patch_size = 0;
  int bands = 0;
  /// count() x dimension(), vectorized in (dy, dx, band) order.
  Matrix<float> filters;
  std::vector<int> classes;
  MarkerStats stats;

  int count() const noexcept { return static_cast<int>(filters.rows()); }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(patch_size) * patch_size * bands;
  }
  std::span<const float> filter(int j) const noexcept { return filters.row(static_cast<std::size_t>(j)); }

  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

/// Splits `total` filters across `classes` as evenly as possible; the
/// remainder goes to the lowest class indices.
std::vector<int> split_filters(int total, int classes);

struct FilterLearningOptions {
  std::uint64_t seed = 0;
  KMeansOptions kmeans{};
};

/// Standardizes every patch with stats over the union of all classes, clusters
/// each class's standardized patches into K_i groups, and emits the unit-norm
/// centroids as filters. Throws BadKError when K_i is out of range for
/// class i and TooFewPatchesError when there are no patches at all.
FilterBank learn_filters(const PatchSets& patches, const std::vector<int>& filters_per_class,
                         const FilterLearningOptions& options = {});

/// Binary container: magic "FLIMFB1\0", u32 version, u32 K, k, k, m, then
/// f32 mean[d], std[d], filters[K*d], u32 class[K]; little-endian.
std::vector<std::uint8_t> serialize_filter_bank(const FilterBank& bank);
FilterBank deserialize_filter_bank(std::span<const std::uint8_t> bytes);
/// Human-readable twin of the binary container.
std::string filter_bank_to_json(const FilterBank& bank);

void save_filter_bank(const std::filesystem::path& path, const FilterBank& bank);
FilterBank load_filter_bank(const std::filesystem::path& path);

}  // namespace flim
