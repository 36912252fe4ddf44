#include "flim/features.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "flim/errors.hpp"
#include "parallel.hpp"

namespace flim {
namespace {

constexpr std::uint32_t kFeatureVersion = 1;

const DatasetEntry& entry_for(const DatasetIndex& dataset, const std::string& id) {
  const auto* e = dataset.find(id);
  if (e == nullptr) throw ValidationError("image '" + id + "' is not in the dataset");
  return *e;
}

template <typename Fn>
FeatureSet build(const DatasetIndex& dataset, std::span<const std::string> ids, Fn&& row_of) {
  FeatureSet out;
  out.ids.assign(ids.begin(), ids.end());
  for (const auto& id : ids) out.labels.push_back(entry_for(dataset, id).label);
  std::vector<std::vector<float>> rows(ids.size());
  detail::parallel_for(ids.size(), [&](std::size_t i) { rows[i] = row_of(entry_for(dataset, ids[i])); });
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  out.features = Matrix<float>(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw DimMismatchError("image '" + ids[i] + "' yields a differently sized vector");
    std::copy(rows[i].begin(), rows[i].end(), out.features.row(i).begin());
  }
  return out;
}

}  // namespace

std::vector<Image> load_images(const DatasetIndex& dataset, std::span<const std::string> ids, const BandRanges& ranges) {
  std::vector<Image> images(ids.size());
  detail::parallel_for(ids.size(), [&](std::size_t i) {
    const auto& e = entry_for(dataset, ids[i]);
    images[i] = load_image(e.path, ranges);
    images[i].id = e.id;
  });
  return images;
}

FeatureSet extract_feature_set(const DatasetIndex& dataset, std::span<const std::string> ids, const NetworkModel& model,
                               const BandRanges& ranges) {
  return build(dataset, ids, [&](const DatasetEntry& e) {
    auto image = load_image(e.path, ranges);
    image.id = e.id;
    return extract_features(image, model);
  });
}

FeatureSet raw_feature_set(const DatasetIndex& dataset, std::span<const std::string> ids, const BandRanges& ranges) {
  return build(dataset, ids, [&](const DatasetEntry& e) { return std::move(load_image(e.path, ranges).data.storage()); });
}

void save_feature_set(const std::filesystem::path& dir, const FeatureSet& set) {
  std::filesystem::create_directories(dir);
  detail::BinaryWriter w;
  w.magic("FLIMFEA1");
  w.u32(kFeatureVersion);
  w.u64(set.features.rows());
  w.u64(set.features.cols());
  w.f32s(set.features.values());
  detail::write_file(dir / "features.bin", w.bytes());
  std::ostringstream manifest;
  for (std::size_t i = 0; i < set.ids.size(); ++i) manifest << set.ids[i] << '\t' << set.labels[i] << '\n';
  detail::write_text(dir / "manifest.tsv", manifest.str());
}

FeatureSet load_feature_set(const std::filesystem::path& dir) {
  const auto bytes = detail::read_file(dir / "features.bin");
  detail::BinaryReader r(bytes, "feature set");
  r.expect_magic("FLIMFEA1");
  if (const auto v = r.u32(); v != kFeatureVersion) throw FormatError("unsupported feature set version " + std::to_string(v));
  const auto rows = r.u64();
  const auto cols = r.u64();
  FeatureSet out;
  out.features = Matrix<float>(rows, cols);
  auto values = r.f32s(rows * cols);
  std::copy(values.begin(), values.end(), out.features.values().begin());
  r.expect_end();

  std::ifstream in(dir / "manifest.tsv");
  if (!in) throw IoError("cannot read " + (dir / "manifest.tsv").string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    int label = 0;
    const char* first = line.data() + (tab == std::string::npos ? line.size() : tab + 1);
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, label);
    if (tab == std::string::npos || ec != std::errc{} || ptr != last || label < 1) {
      throw ParseError("expected id<TAB>label", line_no, static_cast<int>(tab == std::string::npos ? 1 : tab + 2));
    }
    out.ids.push_back(line.substr(0, tab));
    out.labels.push_back(label);
  }
  if (out.ids.size() != rows) throw FormatError("feature manifest lists " + std::to_string(out.ids.size()) + " ids for " +
                                                std::to_string(rows) + " rows");
  return out;
}

}  // namespace flim
