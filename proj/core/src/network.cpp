#include "flim/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "binary_io.hpp"
#include "flim/errors.hpp"
#include "parallel.hpp"

namespace flim {
namespace {

constexpr std::uint32_t kNetworkVersion = 1;

// Running per-channel sums in double.
struct ChannelAccumulator {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  double count = 0.0;

  void add(const Tensor3& t) {
    if (sum.empty()) {
      sum.assign(static_cast<std::size_t>(t.channels()), 0.0);
      sum_sq.assign(sum.size(), 0.0);
    }
    if (static_cast<std::size_t>(t.channels()) != sum.size()) {
      throw DimMismatchError("feature maps with different channel counts");
    }
    const auto values = t.values();
    const std::size_t c = sum.size();
    for (std::size_t i = 0; i < values.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) {
        const double v = values[i + j];
        sum[j] += v;
        sum_sq[j] += v * v;
      }
    }
    count += static_cast<double>(t.height()) * t.width();
  }

  ChannelNorm finish() const {
    ChannelNorm norm;
    for (std::size_t j = 0; j < sum.size(); ++j) {
      const double mean = sum[j] / count;
      const double var = std::max(0.0, sum_sq[j] / count - mean * mean);
      norm.mean.push_back(static_cast<float>(mean));
      norm.std.push_back(std::max(kStdFloor, static_cast<float>(std::sqrt(var))));
    }
    return norm;
  }
};

PoolMode parse_pool_mode(const std::string& s) {
  if (s == "strided") return PoolMode::kStrided;
  if (s == "preserve" || s == "dimension-preserving") return PoolMode::kDimensionPreserving;
  throw ConfigError("unknown pool_mode '" + s + "'");
}

int layer_classes(std::span<const MarkedImage> selected) {
  int c = 0;
  for (const auto& s : selected) c = std::max(c, s.markers.max_label());
  return c;
}

}  // namespace

std::vector<int> LayerSpec::resolve_filters(int classes) const {
  if (!filters_per_class.empty()) {
    if (static_cast<int>(filters_per_class.size()) != classes) {
      throw ConfigError("filters_per_class lists " + std::to_string(filters_per_class.size()) +
                        " classes, the problem has " + std::to_string(classes));
    }
    return filters_per_class;
  }
  return split_filters(total_filters, classes);
}

void LayerSpec::validate() const {
  if (patch_size < 1 || patch_size % 2 == 0) throw ConfigError("patch_size must be odd and positive");
  if (pool_window < 1) throw ConfigError("pool_window must be >= 1");
  if (pool_stride < 1) throw ConfigError("pool_stride must be >= 1");
  if (filters_per_class.empty() && total_filters < 1) {
    throw ConfigError("a layer needs total_filters >= 1 or filters_per_class");
  }
  for (int k : filters_per_class) {
    if (k < 0) throw ConfigError("filters_per_class entries must be >= 0");
  }
}

NetworkSpec parse_network_spec(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("network config is not valid JSON: ") + e.what());
  }
  try {
    NetworkSpec spec;
    spec.input_bands = doc.value("input_bands", 3);
    if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty()) {
      throw ConfigError("network config needs a non-empty \"layers\" array");
    }
    for (const auto& l : doc["layers"]) {
      LayerSpec layer;
      layer.patch_size = l.at("patch_size").get<int>();
      if (l.contains("filters_per_class")) layer.filters_per_class = l["filters_per_class"].get<std::vector<int>>();
      if (l.contains("total_filters")) layer.total_filters = l["total_filters"].get<int>();
      if (!layer.filters_per_class.empty()) {
        int sum = 0;
        for (int k : layer.filters_per_class) sum += k;
        if (l.contains("total_filters") && layer.total_filters != sum) {
          throw ConfigError("total_filters disagrees with filters_per_class");
        }
        layer.total_filters = sum;
      }
      layer.pool_window = l.value("pool_window", 3);
      layer.pool_stride = l.value("pool_stride", 1);
      layer.batch_norm = l.value("batch_norm", true);
      if (l.contains("pool_mode")) layer.pool_mode = parse_pool_mode(l["pool_mode"].get<std::string>());
      layer.validate();
      spec.layers.push_back(std::move(layer));
    }
    if (spec.input_bands < 1) throw ConfigError("input_bands must be >= 1");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
}

NetworkSpec load_network_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read network config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network_spec(buf.str());
}

std::string network_spec_to_json(const NetworkSpec& spec) {
  nlohmann::json doc;
  doc["input_bands"] = spec.input_bands;
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    nlohmann::json j;
    j["patch_size"] = l.patch_size;
    if (!l.filters_per_class.empty()) j["filters_per_class"] = l.filters_per_class;
    j["total_filters"] = l.total_filters;
    j["pool_window"] = l.pool_window;
    j["pool_stride"] = l.pool_stride;
    j["pool_mode"] = l.pool_mode == PoolMode::kStrided ? "strided" : "preserve";
    j["batch_norm"] = l.batch_norm;
    doc["layers"].push_back(std::move(j));
  }
  return doc.dump(2);
}

void ChannelNorm::apply(Tensor3& rep) const {
  if (empty()) return;
  if (static_cast<std::size_t>(rep.channels()) != mean.size()) {
    throw DimMismatchError("output norm has " + std::to_string(mean.size()) + " channels, map has " +
                           std::to_string(rep.channels()));
  }
  auto values = rep.values();
  const std::size_t c = mean.size();
  for (std::size_t i = 0; i < values.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) values[i + j] = (values[i + j] - mean[j]) / std[j];
  }
}

Tensor3 conv_forward(const Tensor3& rep, const FilterBank& bank) {
  if (rep.channels() != bank.bands) {
    throw DimMismatchError("representation has " + std::to_string(rep.channels()) + " bands, filters expect " +
                           std::to_string(bank.bands));
  }
  const int k = bank.count();
  const std::size_t d = bank.dimension();
  // filter-major -> component-major so the inner loop runs over filters
  std::vector<float> weights(d * static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const auto f = bank.filter(j);
    for (std::size_t c = 0; c < d; ++c) weights[c * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)] = f[c];
  }
  Tensor3 out(rep.height(), rep.width(), k);
  std::vector<float> patch(d);
  std::vector<double> acc(static_cast<std::size_t>(k));
  for (int y = 0; y < rep.height(); ++y) {
    for (int x = 0; x < rep.width(); ++x) {
      copy_patch(rep, x, y, bank.patch_size, patch);
      bank.stats.standardize(patch, patch);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t c = 0; c < d; ++c) {
        const double z = patch[c];
        const float* w = weights.data() + c * static_cast<std::size_t>(k);
        for (int j = 0; j < k; ++j) acc[static_cast<std::size_t>(j)] += z * w[j];
      }
      auto dst = out.pixel(y, x);
      for (int j = 0; j < k; ++j) dst[static_cast<std::size_t>(j)] = static_cast<float>(acc[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

Tensor3 relu(Tensor3 rep) {
  for (auto& v : rep.values()) v = std::max(v, 0.0f);
  return rep;
}

int pooled_extent(int extent, int window, int stride) { return (extent - window) / stride + 1; }

Tensor3 max_pool(const Tensor3& rep, int window, int stride, PoolMode mode) {
  if (window < 1 || stride < 1) throw BadWindowError("pool window and stride must be >= 1");
  if (window > std::min(rep.height(), rep.width())) {
    throw BadWindowError("pool window " + std::to_string(window) + " exceeds the map size " +
                         std::to_string(rep.height()) + "x" + std::to_string(rep.width()));
  }
  const int c = rep.channels();
  if (mode == PoolMode::kDimensionPreserving) {
    const int before = (window - 1) / 2;
    Tensor3 out(rep.height(), rep.width(), c);
    for (int y = 0; y < rep.height(); ++y) {
      for (int x = 0; x < rep.width(); ++x) {
        auto dst = out.pixel(y, x);
        std::fill(dst.begin(), dst.end(), -std::numeric_limits<float>::infinity());
        for (int dy = 0; dy < window; ++dy) {
          for (int dx = 0; dx < window; ++dx) {
            const int yy = y - before + dy;
            const int xx = x - before + dx;
            if (!rep.contains(yy, xx)) {
              for (auto& v : dst) v = std::max(v, 0.0f);  // zero padding
              continue;
            }
            const auto src = rep.pixel(yy, xx);
            for (int j = 0; j < c; ++j) dst[static_cast<std::size_t>(j)] = std::max(dst[static_cast<std::size_t>(j)], src[static_cast<std::size_t>(j)]);
          }
        }
      }
    }
    return out;
  }
  const int oh = pooled_extent(rep.height(), window, stride);
  const int ow = pooled_extent(rep.width(), window, stride);
  Tensor3 out(oh, ow, c);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      auto dst = out.pixel(y, x);
      std::fill(dst.begin(), dst.end(), -std::numeric_limits<float>::infinity());
      for (int dy = 0; dy < window; ++dy) {
        for (int dx = 0; dx < window; ++dx) {
          const auto src = rep.pixel(y * stride + dy, x * stride + dx);
          for (int j = 0; j < c; ++j) dst[static_cast<std::size_t>(j)] = std::max(dst[static_cast<std::size_t>(j)], src[static_cast<std::size_t>(j)]);
        }
      }
    }
  }
  return out;
}

ChannelNorm fit_output_norm(std::span<const Tensor3> features) {
  if (features.empty()) throw EmptyInputError("cannot fit an output norm on no feature maps");
  ChannelAccumulator acc;
  for (const auto& f : features) acc.add(f);
  return acc.finish();
}

Tensor3 apply_layer(const Tensor3& rep, const LayerModel& layer, PoolMode mode, bool apply_norm) {
  auto out = relu(conv_forward(rep, layer.bank));
  out = max_pool(out, layer.spec.pool_window, layer.spec.pool_stride, mode);
  if (apply_norm && layer.spec.batch_norm) layer.output_norm.apply(out);
  return out;
}

std::pair<int, int> output_extent(const NetworkModel& model, int height, int width) {
  for (const auto& layer : model.layers) {
    if (layer.spec.pool_mode == PoolMode::kStrided) {
      height = pooled_extent(height, layer.spec.pool_window, layer.spec.pool_stride);
      width = pooled_extent(width, layer.spec.pool_window, layer.spec.pool_stride);
    }
  }
  return {height, width};
}

void fit_network_norms(NetworkModel& model, std::span<const Image> images) {
  if (images.empty()) throw EmptyInputError("no images to fit output norms on");
  std::vector<Tensor3> reps(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) reps[i] = images[i].data;
  for (auto& layer : model.layers) {
    detail::parallel_for(reps.size(), [&](std::size_t i) {
      reps[i] = apply_layer(reps[i], layer, layer.spec.pool_mode, false);
    });
    if (layer.spec.batch_norm) {
      layer.output_norm = fit_output_norm(reps);
      detail::parallel_for(reps.size(), [&](std::size_t i) { layer.output_norm.apply(reps[i]); });
    } else {
      layer.output_norm = {};
    }
  }
}

NetworkModel learn_network(std::span<const MarkedImage> selected, const NetworkSpec& spec,
                           std::span<const Image> norm_fit_images, const LearnOptions& options) {
  if (selected.empty()) throw InsufficientMarkersError("no marked images selected");
  if (spec.layers.empty()) throw ConfigError("network spec has no layers");
  if (options.fixed_prefix.size() > spec.layers.size()) throw ConfigError("fixed prefix longer than the network");
  const int classes = options.classes > 0 ? options.classes : layer_classes(selected);
  for (const auto& s : selected) {
    if (s.image.bands() != spec.input_bands) {
      throw DimMismatchError("image '" + s.image.id + "' has " + std::to_string(s.image.bands()) + " bands, network expects " +
                             std::to_string(spec.input_bands));
    }
    if (s.markers.width != s.image.width() || s.markers.height != s.image.height()) {
      throw ValidationError("markers of '" + s.image.id + "' were drawn on a " + std::to_string(s.markers.width) + "x" +
                            std::to_string(s.markers.height) + " image");
    }
    s.markers.validate(classes);
  }

  NetworkModel model;
  model.input_bands = spec.input_bands;
  std::vector<Tensor3> reps(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) reps[i] = selected[i].image.data;
  const PoolMode learn_pool = PoolMode::kDimensionPreserving;

  auto advance = [&](const LayerModel& layer) {
    detail::parallel_for(reps.size(), [&](std::size_t i) {
      auto out = relu(conv_forward(reps[i], layer.bank));
      if (options.pool_during_learning) out = max_pool(out, layer.spec.pool_window, 1, learn_pool);
      reps[i] = std::move(out);
    });
  };

  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (l < options.fixed_prefix.size()) {
      const auto& fixed = options.fixed_prefix[l];
      if (!(fixed.spec == spec.layers[l])) throw ConfigError("fixed layer " + std::to_string(l + 1) + " does not match the spec");
      model.layers.push_back(fixed);
      if (l + 1 < spec.layers.size()) advance(model.layers.back());
      continue;
    }
    const auto& layer_spec = spec.layers[l];
    layer_spec.validate();
    const auto counts = layer_spec.resolve_filters(classes);

    PatchSets patches(layer_spec.patch_size, reps.front().channels());
    patches.ensure_classes(classes);
    for (std::size_t i = 0; i < selected.size(); ++i) {
      patches.merge(extract_patches(reps[i], selected[i].markers, layer_spec.patch_size));
    }
    for (int c = 1; c <= classes; ++c) {
      const auto have = patches.of_class(c).size();
      if (have < static_cast<std::size_t>(counts[static_cast<std::size_t>(c - 1)])) {
        throw InsufficientMarkersError("layer " + std::to_string(l + 1) + ", class " + std::to_string(c) + ": " +
                                       std::to_string(have) + " marker pixels for " +
                                       std::to_string(counts[static_cast<std::size_t>(c - 1)]) + " filters");
      }
    }
    FilterLearningOptions flo;
    flo.seed = options.seed + l;
    flo.kmeans = options.kmeans;
    LayerModel layer{layer_spec, learn_filters(patches, counts, flo), {}};
    model.layers.push_back(std::move(layer));
    if (l + 1 < spec.layers.size()) advance(model.layers.back());
  }

  if (norm_fit_images.empty()) {
    std::vector<Image> images;
    for (const auto& s : selected) images.push_back(s.image);
    fit_network_norms(model, images);
  } else {
    fit_network_norms(model, norm_fit_images);
  }
  return model;
}

namespace {

/// The learning-time layer: conv -> ReLU -> stride-1 padded pooling, no output norm.
Tensor3 apply_preserving(const Tensor3& rep, const LayerModel& layer) {
  return max_pool(relu(conv_forward(rep, layer.bank)), layer.spec.pool_window, 1, PoolMode::kDimensionPreserving);
}

FeatureMap run_layers(const Image& image, const NetworkModel& model, int layer, bool preserve) {
  if (image.bands() != model.input_bands) {
    throw DimMismatchError("image '" + image.id + "' has " + std::to_string(image.bands()) + " bands, network expects " +
                           std::to_string(model.input_bands));
  }
  if (layer < 0 || layer > static_cast<int>(model.layers.size())) {
    throw ValidationError("layer " + std::to_string(layer) + " out of range");
  }
  FeatureMap map{image.id, 0, image.data};
  for (int l = 0; l < layer; ++l) {
    const auto& lm = model.layers[static_cast<std::size_t>(l)];
    map.data = preserve ? apply_preserving(map.data, lm) : apply_layer(map.data, lm, lm.spec.pool_mode, true);
    map.layer = l + 1;
  }
  return map;
}

}  // namespace

FeatureMap forward_to_layer(const Image& image, const NetworkModel& model, int layer) {
  return run_layers(image, model, layer, false);
}

FeatureMap forward_preserving(const Image& image, const NetworkModel& model, int layer) {
  return run_layers(image, model, layer, true);
}

std::vector<float> extract_features(const Image& image, const NetworkModel& model) {
  auto map = forward_to_layer(image, model, static_cast<int>(model.layers.size()));
  return std::move(map.data.storage());
}

std::vector<std::uint8_t> serialize_network(const NetworkModel& model) {
  detail::BinaryWriter w;
  w.magic("FLIMNET1");
  w.u32(kNetworkVersion);
  w.u32(static_cast<std::uint32_t>(model.input_bands));
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    const auto& s = layer.spec;
    w.u32(static_cast<std::uint32_t>(s.patch_size));
    w.u32(static_cast<std::uint32_t>(s.total_filters));
    w.u32(static_cast<std::uint32_t>(s.filters_per_class.size()));
    for (int k : s.filters_per_class) w.u32(static_cast<std::uint32_t>(k));
    w.u32(static_cast<std::uint32_t>(s.pool_window));
    w.u32(static_cast<std::uint32_t>(s.pool_stride));
    w.u32(s.pool_mode == PoolMode::kStrided ? 1u : 0u);
    w.u32(s.batch_norm ? 1u : 0u);
    w.blob(serialize_filter_bank(layer.bank));
    w.u32(static_cast<std::uint32_t>(layer.output_norm.mean.size()));
    w.f32s(layer.output_norm.mean);
    w.f32s(layer.output_norm.std);
  }
  return std::move(w.bytes());
}

NetworkModel deserialize_network(std::span<const std::uint8_t> bytes) {
  detail::BinaryReader r(bytes, "network model");
  r.expect_magic("FLIMNET1");
  if (const auto v = r.u32(); v != kNetworkVersion) throw FormatError("unsupported network version " + std::to_string(v));
  NetworkModel model;
  model.input_bands = static_cast<int>(r.u32());
  const auto layers = r.u32();
  for (std::uint32_t l = 0; l < layers; ++l) {
    LayerModel layer;
    auto& s = layer.spec;
    s.patch_size = static_cast<int>(r.u32());
    s.total_filters = static_cast<int>(r.u32());
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) s.filters_per_class.push_back(static_cast<int>(r.u32()));
    s.pool_window = static_cast<int>(r.u32());
    s.pool_stride = static_cast<int>(r.u32());
    s.pool_mode = r.u32() == 1u ? PoolMode::kStrided : PoolMode::kDimensionPreserving;
    s.batch_norm = r.u32() != 0u;
    layer.bank = deserialize_filter_bank(r.blob());
    const auto channels = r.u32();
    layer.output_norm.mean = r.f32s(channels);
    layer.output_norm.std = r.f32s(channels);
    model.layers.push_back(std::move(layer));
  }
  r.expect_end();
  return model;
}

void save_network(const std::filesystem::path& path, const NetworkModel& model) {
  detail::write_file(path, serialize_network(model));
}

NetworkModel load_network(const std::filesystem::path& path) { return deserialize_network(detail::read_file(path)); }

}  // namespace flim
