#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "flim/image_io.hpp"
#include "flim/tensor.hpp"

namespace flim::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "flim") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline Tensor3 random_tensor(int h, int w, int c, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor3 t(h, w, c);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

inline Raster8 solid_raster(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Raster8 out;
  out.width = w;
  out.height = h;
  out.channels = 3;
  out.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    out.pixels[i] = r;
    out.pixels[i + 1] = g;
    out.pixels[i + 2] = b;
  }
  return out;
}

inline Raster8 noise_raster(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  Raster8 out = solid_raster(w, h, 0, 0, 0);
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(u(rng));
  return out;
}

}  // namespace flim::testing
