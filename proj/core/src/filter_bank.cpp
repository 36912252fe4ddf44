#include "flim/filter_bank.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "flim/errors.hpp"

namespace flim {
namespace {

constexpr std::uint32_t kBankVersion = 1;

MarkerStats stats_over(std::span<const std::span<const float>> patches) {
  const std::size_t d = patches.front().size();
  const double n = static_cast<double>(patches.size());
  std::vector<double> mean(d, 0.0);
  for (const auto& p : patches) {
    if (p.size() != d) throw DimMismatchError("patches of different dimensions");
    for (std::size_t j = 0; j < d; ++j) mean[j] += p[j];
  }
  for (auto& m : mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& p : patches) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = p[j] - mean[j];
      var[j] += diff * diff;
    }
  }
  MarkerStats stats;
  stats.mean.resize(d);
  stats.std.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    stats.mean[j] = static_cast<float>(mean[j]);
    const double sd = std::sqrt(var[j] / n);
    if (sd < kStdFloor) {
      stats.std[j] = kStdFloor;
      ++stats.floored;
    } else {
      stats.std[j] = static_cast<float>(sd);
    }
  }
  return stats;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void MarkerStats::standardize(std::span<const float> patch, std::span<float> out) const {
  for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (patch[j] - mean[j]) / std[j];
}

MarkerStats compute_marker_stats(std::span<const std::span<const float>> patches) {
  if (patches.size() < 2) throw TooFewPatchesError("marker statistics need at least two patches");
  return stats_over(patches);
}

std::vector<int> split_filters(int total, int classes) {
  if (classes < 1) throw BadKError("need at least one class to split filters across");
  if (total < 1) throw BadKError("total filter count must be positive");
  std::vector<int> out(static_cast<std::size_t>(classes), total / classes);
  for (int i = 0; i < total % classes; ++i) ++out[static_cast<std::size_t>(i)];
  return out;
}

FilterBank learn_filters(const PatchSets& patches, const std::vector<int>& filters_per_class,
                         const FilterLearningOptions& options) {
  const auto all = patches.all();
  if (all.empty()) throw TooFewPatchesError("no marker patches to learn filters from");
  if (patches.classes() > static_cast<int>(filters_per_class.size())) {
    throw BadKError("marker patches carry class " + std::to_string(patches.classes()) + " but filter counts cover only " +
                    std::to_string(filters_per_class.size()) + " classes");
  }
  int total = 0;
  for (std::size_t i = 0; i < filters_per_class.size(); ++i) {
    const int k = filters_per_class[i];
    const auto available = patches.of_class(static_cast<int>(i) + 1).size();
    if (k < 0 || static_cast<std::size_t>(k) > available) {
      throw BadKError("class " + std::to_string(i + 1) + ": K=" + std::to_string(k) + " but only " +
                      std::to_string(available) + " marker patches");
    }
    total += k;
  }
  if (total == 0) throw BadKError("filter bank would be empty");

  FilterBank bank;
  bank.patch_size = patches.patch_size();
  bank.bands = patches.bands();
  bank.stats = stats_over(all);
  const std::size_t d = patches.dimension();
  bank.filters = Matrix<float>(static_cast<std::size_t>(total), d);

  std::vector<float> standardized(d);
  std::size_t row = 0;
  for (std::size_t i = 0; i < filters_per_class.size(); ++i) {
    const int label = static_cast<int>(i) + 1;
    const int k = filters_per_class[i];
    if (k == 0) continue;
    const auto& members = patches.of_class(label);
    Matrix<double> points(members.size(), d);
    for (std::size_t p = 0; p < members.size(); ++p) {
      bank.stats.standardize(members[p].values, standardized);
      std::copy(standardized.begin(), standardized.end(), points.row(p).begin());
    }
    KMeansOptions km = options.kmeans;
    km.seed = mix_seed(options.seed, static_cast<std::uint64_t>(label));
    const auto clusters = kmeans(points, k, km);
    for (std::size_t c = 0; c < clusters.centroids.rows(); ++c, ++row) {
      const auto centroid = clusters.centroids.row(c);
      double norm = 0.0;
      for (double v : centroid) norm += v * v;
      norm = std::sqrt(norm);
      auto dst = bank.filters.row(row);
      if (norm < 1e-12) {
        spdlog::warn("class {} centroid {} is the zero vector; using the uniform unit filter", label, c);
        std::fill(dst.begin(), dst.end(), static_cast<float>(1.0 / std::sqrt(static_cast<double>(d))));
      } else {
        for (std::size_t j = 0; j < d; ++j) dst[j] = static_cast<float>(centroid[j] / norm);
      }
      bank.classes.push_back(label);
    }
  }
  return bank;
}

std::vector<std::uint8_t> serialize_filter_bank(const FilterBank& bank) {
  detail::BinaryWriter w;
  w.magic("FLIMFB1");
  w.u32(kBankVersion);
  w.u32(static_cast<std::uint32_t>(bank.count()));
  w.u32(static_cast<std::uint32_t>(bank.patch_size));
  w.u32(static_cast<std::uint32_t>(bank.patch_size));
  w.u32(static_cast<std::uint32_t>(bank.bands));
  w.f32s(bank.stats.mean);
  w.f32s(bank.stats.std);
  w.f32s(bank.filters.values());
  for (int c : bank.classes) w.u32(static_cast<std::uint32_t>(c));
  return std::move(w.bytes());
}

FilterBank deserialize_filter_bank(std::span<const std::uint8_t> bytes) {
  detail::BinaryReader r(bytes, "filter bank");
  r.expect_magic("FLIMFB1");
  if (const auto v = r.u32(); v != kBankVersion) throw FormatError("unsupported filter bank version " + std::to_string(v));
  FilterBank bank;
  const auto count = r.u32();
  const auto kh = r.u32();
  const auto kw = r.u32();
  if (kh != kw) throw FormatError("filter bank: non-square patches are not supported");
  bank.patch_size = static_cast<int>(kh);
  bank.bands = static_cast<int>(r.u32());
  const auto d = bank.dimension();
  bank.stats.mean = r.f32s(d);
  bank.stats.std = r.f32s(d);
  for (float s : bank.stats.std) bank.stats.floored += s <= kStdFloor ? 1 : 0;
  bank.filters = Matrix<float>(count, d);
  auto values = r.f32s(count * d);
  std::copy(values.begin(), values.end(), bank.filters.values().begin());
  for (std::uint32_t j = 0; j < count; ++j) bank.classes.push_back(static_cast<int>(r.u32()));
  r.expect_end();
  return bank;
}

std::string filter_bank_to_json(const FilterBank& bank) {
  nlohmann::json doc;
  doc["v"] = 1;
  doc["format"] = "FLIMFB1";
  doc["count"] = bank.count();
  doc["patch_size"] = bank.patch_size;
  doc["bands"] = bank.bands;
  doc["stats"] = {{"mean", bank.stats.mean}, {"std", bank.stats.std}, {"floored", bank.stats.floored}};
  doc["filters"] = nlohmann::json::array();
  for (int j = 0; j < bank.count(); ++j) {
    const auto f = bank.filter(j);
    doc["filters"].push_back({{"class", bank.classes[static_cast<std::size_t>(j)]},
                              {"weights", std::vector<float>(f.begin(), f.end())}});
  }
  return doc.dump(1);
}

void save_filter_bank(const std::filesystem::path& path, const FilterBank& bank) {
  detail::write_file(path, serialize_filter_bank(bank));
}

FilterBank load_filter_bank(const std::filesystem::path& path) {
  return deserialize_filter_bank(detail::read_file(path));
}

}  // namespace flim
