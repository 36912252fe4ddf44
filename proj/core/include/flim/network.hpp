#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flim/filter_bank.hpp"
#include "flim/image_io.hpp"
#include "flim/markers.hpp"
#include "flim/tensor.hpp"

namespace flim {

enum class PoolMode {
  /// stride 1, zero padding, output H x W equals input H x W
  kDimensionPreserving,
  /// valid pooling: floor((H - window) / stride) + 1
  kStrided,
};

struct LayerSpec {
  int patch_size = 7;
  /// Explicit K_1..K_c; when empty, total_filters is split across classes.
  std::vector<int> filters_per_class;
  int total_filters = 0;
  int pool_window = 3;
  int pool_stride = 4;
  PoolMode pool_mode = PoolMode::kStrided;
  bool batch_norm = true;

  /// K_1..K_c for a problem with `classes` classes.
  std::vector<int> resolve_filters(int classes) const;
  /// Throws ConfigError on an even patch size or non-positive window/stride.
  void validate() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  int input_bands = 3;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// JSON: {"input_bands": 3, "layers": [{"patch_size", "filters_per_class" |
/// "total_filters", "pool_window", "pool_stride", "batch_norm",
/// optional "pool_mode": "strided" | "preserve"}]}. Throws ConfigError.
NetworkSpec parse_network_spec(std::string_view json);
NetworkSpec load_network_spec(const std::filesystem::path& path);
std::string network_spec_to_json(const NetworkSpec& spec);

/// Frozen per-channel normalization applied after pooling.
struct ChannelNorm {
  std::vector<float> mean;
  std::vector<float> std;  // already floored at kStdFloor

  bool empty() const noexcept { return mean.empty(); }
  void apply(Tensor3& rep) const;

  friend bool operator==(const ChannelNorm&, const ChannelNorm&) = default;
};

struct LayerModel {
  LayerSpec spec;
  FilterBank bank;
  ChannelNorm output_norm;

  friend bool operator==(const LayerModel&, const LayerModel&) = default;
};

struct NetworkModel {
  int input_bands = 3;
  std::vector<LayerModel> layers;

  int output_channels() const { return layers.empty() ? input_bands : layers.back().bank.count(); }

  friend bool operator==(const NetworkModel&, const NetworkModel&) = default;
};

/// Activations of one image at one layer (layer 0 is the input).
struct FeatureMap {
  std::string image_id;
  int layer = 0;
  Tensor3 data;
};

/// output(p, j) = vec(standardize(P(p))) . vec(F_j) with zero padding, so the
/// output keeps the input's height and width. Throws DimMismatchError when
/// the channel count differs from the bank's band count.
Tensor3 conv_forward(const Tensor3& rep, const FilterBank& bank);
Tensor3 relu(Tensor3 rep);
/// Throws BadWindowError for window < 1, stride < 1, or window > min(H, W).
Tensor3 max_pool(const Tensor3& rep, int window, int stride, PoolMode mode);
int pooled_extent(int extent, int window, int stride);

/// Per-channel mean and std (floored) over every pixel of every map.
/// Throws EmptyInputError for an empty list, DimMismatchError for differing
/// channel counts.
ChannelNorm fit_output_norm(std::span<const Tensor3> features);

/// conv -> ReLU -> max-pool, then the layer's output norm if requested and fitted.
Tensor3 apply_layer(const Tensor3& rep, const LayerModel& layer, PoolMode mode, bool apply_norm);

/// Output height/width of the full network in extraction mode.
std::pair<int, int> output_extent(const NetworkModel& model, int height, int width);

struct MarkedImage {
  Image image;
  MarkerSet markers;
};

struct LearnOptions {
  std::uint64_t seed = 0;
  /// Number of classes; 0 infers it from the largest marker label.
  int classes = 0;
  /// Apply stride-1 padded pooling between layers during learning; when false,
  /// pooling is skipped while learning.
  bool pool_during_learning = true;
  KMeansOptions kmeans{};
  /// Layers already learned and kept as-is (a prefix of the spec).
  std::vector<LayerModel> fixed_prefix;
};

/// Learns one filter bank per layer from the markers of `selected`, feeding
/// each layer the previous layer's dimension-preserving output at the original
/// marker coordinates, then fits every batch-normalized layer's output norm on
/// `norm_fit_images` (or on the selected images when that span is empty).
/// Throws InsufficientMarkersError when a class has fewer marker pixels than
/// its filter count.
NetworkModel learn_network(std::span<const MarkedImage> selected, const NetworkSpec& spec,
                           std::span<const Image> norm_fit_images, const LearnOptions& options = {});

/// Refits the output norms of `model` on `images`, layer by layer.
void fit_network_norms(NetworkModel& model, std::span<const Image> images);

/// Runs every layer in its configured pooling mode and flattens the last map
/// in (y, x, channel) order. Throws DimMismatchError if the band count differs.
std::vector<float> extract_features(const Image& image, const NetworkModel& model);
/// Activations after layer `layer` (1-based) in extraction mode.
FeatureMap forward_to_layer(const Image& image, const NetworkModel& model, int layer);
/// Activations after layer `layer` with stride-1 padded pooling, so the map
/// keeps the image's height and width. Mirrors learning: no output norms.
FeatureMap forward_preserving(const Image& image, const NetworkModel& model, int layer);

/// Binary container with magic "FLIMNET1": per layer the spec, an embedded
/// FLIMFB1 blob, and the output norm.
std::vector<std::uint8_t> serialize_network(const NetworkModel& model);
NetworkModel deserialize_network(std::span<const std::uint8_t> bytes);
void save_network(const std::filesystem::path& path, const NetworkModel& model);
NetworkModel load_network(const std::filesystem::path& path);

}  // namespace flim
