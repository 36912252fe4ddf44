#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flim {

/// Dense height x width x channels array of 32-bit floats, stored row-major
/// as (y, x, channel). Used for input images and for layer activations.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels, float fill = 0.0f)
      : height_(height),
        width_(width),
        channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t offset(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  float& at(int y, int x, int c) noexcept { return data_[offset(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return data_[offset(y, x, c)]; }

  bool contains(int y, int x) const noexcept {
    return y >= 0 && y < height_ && x >= 0 && x < width_;
  }

  /// All channel values of pixel (y, x).
  std::span<float> pixel(int y, int x) noexcept {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int y, int x) const noexcept {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(channels_)};
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  std::vector<float>& storage() noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

}  // namespace flim
