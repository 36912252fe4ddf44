#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flim/tensor.hpp"

namespace flim {

/// CIE L*a*b* triple (D65 white).
struct Lab {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// sRGB (8-bit scale, each channel in [0,255]) to CIE L*a*b* via linear
/// sRGB and XYZ under D65.
Lab rgb_to_lab(double r, double g, double b);

/// Inverse of rgb_to_lab; returns channels on the [0,255] scale, unclamped.
std::array<double, 3> lab_to_rgb(const Lab& lab);

/// Fixed per-band ranges used to map L*a*b* to [0,1].
struct BandRanges {
  std::array<double, 3> lower{0.0, -128.0, -128.0};
  std::array<double, 3> upper{100.0, 127.0, 127.0};

  /// Affine map into [0,1], clamped.
  std::array<float, 3> normalize(const Lab& lab) const;
  /// Unclamped affine map into [0,1] (no clamp), the exact inverse of denormalize.
  std::array<double, 3> normalize_unclamped(const Lab& lab) const;
  Lab denormalize(std::span<const double, 3> unit) const;
};

/// 8-bit interleaved raster (1 or 3 channels).
struct Raster8 {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  std::uint8_t* pixel(int y, int x) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
  const std::uint8_t* pixel(int y, int x) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
};

/// A dataset image: L*a*b* bands normalized to [0,1].
struct Image {
  std::string id;
  Tensor3 data;

  int height() const noexcept { return data.height(); }
  int width() const noexcept { return data.width(); }
  int bands() const noexcept { return data.channels(); }
};

/// Decodes an 8-bit 3-channel PNG or JPEG file.
/// Throws IoError when the file cannot be read and FormatError for any other
/// format, bit depth, or channel count.
Raster8 decode_rgb(const std::filesystem::path& path);
Raster8 decode_rgb(std::span<const std::uint8_t> bytes);

/// Encodes a 1- or 3-channel raster as PNG.
std::vector<std::uint8_t> encode_png(const Raster8& raster);
void write_png(const std::filesystem::path& path, const Raster8& raster);

Image lab_image_from_rgb(const Raster8& rgb, std::string id, const BandRanges& ranges = {});
Image load_image(const std::filesystem::path& path, const BandRanges& ranges = {});

/// Bilinear downscale so the longer side is at most `max_side`; never upscales.
Raster8 resize_to_fit(const Raster8& raster, int max_side);

}  // namespace flim
