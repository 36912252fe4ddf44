#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flim {

struct DatasetEntry {
  std::string id;
  std::filesystem::path path;
  int label = 0;  // 1..classes

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

/// Images of a labeled dataset. Ids are unique and labels lie in 1..classes.
struct DatasetIndex {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;
  int classes = 0;

  const DatasetEntry* find(const std::string& id) const;
  const DatasetEntry& at(const std::string& id) const;

  friend bool operator==(const DatasetIndex&, const DatasetIndex&) = default;
};

/// Indexes `root`. If `root/manifest.tsv` exists it is authoritative
/// (`id<TAB>path<TAB>label`, paths relative to root); otherwise every PNG/JPEG
/// in a positive-integer-named subdirectory is an image of that class, with
/// the file stem as its id. Entries are ordered by (label, id).
///
/// Throws LayoutError when no classes are found or fewer than two exist,
/// DuplicateIdError when an id appears twice with different content, and
/// ParseError for malformed manifest lines.
DatasetIndex load_dataset(const std::filesystem::path& root);

}  // namespace flim
