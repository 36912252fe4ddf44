#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flim/markers.hpp"
#include "flim/tensor.hpp"

namespace flim {

/// k x k x m neighborhood of a marker pixel, vectorized in (dy, dx, band)
/// row-major order. Entries outside the source are zero.
struct Patch {
  std::vector<float> values;
  int label = 0;
  std::string image_id;
  int x = 0;
  int y = 0;
};

/// Patches grouped by marker label. `by_class[i - 1]` holds the patches of
/// class i; every patch in it has label i.
class PatchSets {
 public:
  PatchSets() = default;
  PatchSets(int patch_size, int bands) : patch_size_(patch_size), bands_(bands) {}

  int patch_size() const noexcept { return patch_size_; }
  int bands() const noexcept { return bands_; }
  std::size_t dimension() const noexcept {
    return static_cast<std::size_t>(patch_size_) * patch_size_ * bands_;
  }
  int classes() const noexcept { return static_cast<int>(by_class_.size()); }

  const std::vector<Patch>& of_class(int label) const;
  std::size_t total() const noexcept;

  /// Adds a patch under its label, growing the class list as needed.
  void add(Patch patch);
  /// Appends every patch of `other` (same geometry required).
  void merge(PatchSets&& other);
  void ensure_classes(int classes);

  /// The union over all classes, in class order.
  std::vector<std::span<const float>> all() const;

 private:
  int patch_size_ = 0;
  int bands_ = 0;
  std::vector<std::vector<Patch>> by_class_;
};

/// Copies the k x k x m window centered at (x, y) into `out` (size k*k*m),
/// zero-filling positions outside the representation.
void copy_patch(const Tensor3& rep, int x, int y, int patch_size, std::span<float> out);

/// One patch per marker pixel of `markers`, grouped by label.
/// Throws BadPatchSizeError when k is not odd and positive or exceeds
/// 2 * min(H, W), and ValidationError when markers fall outside `rep`.
PatchSets extract_patches(const Tensor3& rep, const MarkerSet& markers, int patch_size);

}  // namespace flim
