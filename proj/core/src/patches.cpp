#include "flim/patches.hpp"

#include <algorithm>

#include "flim/errors.hpp"

namespace flim {

const std::vector<Patch>& PatchSets::of_class(int label) const {
  static const std::vector<Patch> kEmpty;
  if (label < 1 || label > classes()) return kEmpty;
  return by_class_[static_cast<std::size_t>(label - 1)];
}

std::size_t PatchSets::total() const noexcept {
  std::size_t n = 0;
  for (const auto& set : by_class_) n += set.size();
  return n;
}

void PatchSets::ensure_classes(int classes) {
  if (classes > this->classes()) by_class_.resize(static_cast<std::size_t>(classes));
}

void PatchSets::add(Patch patch) {
  if (patch.label < 1) throw ValidationError("patch label must be >= 1");
  if (patch.values.size() != dimension()) throw DimMismatchError("patch size does not match the patch set geometry");
  ensure_classes(patch.label);
  by_class_[static_cast<std::size_t>(patch.label - 1)].push_back(std::move(patch));
}

void PatchSets::merge(PatchSets&& other) {
  if (other.total() == 0) return;
  if (total() == 0 && patch_size_ == 0) {
    patch_size_ = other.patch_size_;
    bands_ = other.bands_;
  }
  if (other.patch_size_ != patch_size_ || other.bands_ != bands_) {
    throw DimMismatchError("cannot merge patch sets with different geometry");
  }
  ensure_classes(other.classes());
  for (std::size_t c = 0; c < other.by_class_.size(); ++c) {
    auto& dst = by_class_[c];
    std::move(other.by_class_[c].begin(), other.by_class_[c].end(), std::back_inserter(dst));
  }
  other.by_class_.clear();
}

std::vector<std::span<const float>> PatchSets::all() const {
  std::vector<std::span<const float>> out;
  out.reserve(total());
  for (const auto& set : by_class_) {
    for (const auto& p : set) out.emplace_back(p.values);
  }
  return out;
}

void copy_patch(const Tensor3& rep, int x, int y, int patch_size, std::span<float> out) {
  const int half = patch_size / 2;
  const int m = rep.channels();
  std::size_t i = 0;
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const int yy = y + dy;
      const int xx = x + dx;
      if (rep.contains(yy, xx)) {
        const auto src = rep.pixel(yy, xx);
        std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(i), m, 0.0f);
      }
      i += static_cast<std::size_t>(m);
    }
  }
}

PatchSets extract_patches(const Tensor3& rep, const MarkerSet& markers, int patch_size) {
  if (patch_size < 1 || patch_size % 2 == 0) {
    throw BadPatchSizeError("patch size must be odd and positive, got " + std::to_string(patch_size));
  }
  if (patch_size > 2 * std::min(rep.height(), rep.width())) {
    throw BadPatchSizeError("patch size " + std::to_string(patch_size) + " exceeds twice the smaller image side");
  }
  for (const auto& p : markers.pixels) {
    if (!rep.contains(p.y, p.x)) {
      throw ValidationError("marker (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                            ") outside the representation of '" + markers.image_id + "'");
    }
    if (p.label < 1) throw ValidationError("marker labels are 1-based");
  }
  PatchSets sets(patch_size, rep.channels());
  sets.ensure_classes(markers.max_label());
  for (const auto& p : markers.pixels) {
    Patch patch{std::vector<float>(sets.dimension()), p.label, markers.image_id, p.x, p.y};
    copy_patch(rep, p.x, p.y, patch_size, patch.values);
    sets.add(std::move(patch));
  }
  return sets;
}

}  // namespace flim
