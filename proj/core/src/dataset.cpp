#include "flim/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "flim/errors.hpp"

namespace flim {
namespace {

std::optional<int> parse_positive(std::string_view text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || value < 1) return std::nullopt;
  return value;
}

bool is_image_file(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.tsv");
  if (!in) throw IoError("cannot read " + (root / "manifest.tsv").string());
  std::vector<DatasetEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw ParseError("expected id<TAB>path<TAB>label", line_no);
    const auto label = parse_positive(fields[2]);
    if (!label) throw ParseError("label must be a positive integer", line_no, fields[0].size() + fields[1].size() + 3);
    if (fields[0].empty()) throw ParseError("empty image id", line_no, 1);
    entries.push_back({fields[0], root / fields[1], *label});
  }
  return entries;
}

std::vector<DatasetEntry> scan_class_dirs(const std::filesystem::path& root) {
  std::vector<DatasetEntry> entries;
  for (const auto& dir : std::filesystem::directory_iterator(root)) {
    if (!dir.is_directory()) continue;
    const auto label = parse_positive(dir.path().filename().string());
    if (!label) continue;
    for (const auto& file : std::filesystem::directory_iterator(dir.path())) {
      if (file.is_regular_file() && is_image_file(file.path())) {
        entries.push_back({file.path().stem().string(), file.path(), *label});
      }
    }
  }
  return entries;
}

}  // namespace

const DatasetEntry* DatasetIndex::find(const std::string& id) const {
  const auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.id == id; });
  return it == entries.end() ? nullptr : &*it;
}

const DatasetEntry& DatasetIndex::at(const std::string& id) const {
  if (const auto* entry = find(id)) return *entry;
  throw ValidationError("unknown image id '" + id + "'");
}

DatasetIndex load_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
  DatasetIndex index;
  index.root = root;
  auto entries = std::filesystem::exists(root / "manifest.tsv") ? read_manifest(root) : scan_class_dirs(root);

  std::map<std::string, const DatasetEntry*> seen;
  std::vector<DatasetEntry> unique;
  for (const auto& entry : entries) {
    auto [it, inserted] = seen.emplace(entry.id, &entry);
    if (inserted) {
      unique.push_back(entry);
    } else if (!(*it->second == entry)) {
      throw DuplicateIdError("image id '" + entry.id + "' appears more than once with different path or label");
    }
  }
  if (unique.empty()) throw LayoutError("no class directories or manifest entries under " + root.string());

  std::sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) {
    return a.label != b.label ? a.label < b.label : a.id < b.id;
  });
  std::set<int> labels;
  for (const auto& e : unique) labels.insert(e.label);
  index.classes = *labels.rbegin();
  if (index.classes < 2) throw LayoutError("a dataset needs at least two classes");
  index.entries = std::move(unique);
  return index;
}

}  // namespace flim
