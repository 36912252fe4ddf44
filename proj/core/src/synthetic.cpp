#include "flim/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace flim {
namespace {

using Color = std::array<double, 3>;

/// Both classes share one palette, so only the texture separates them.
Color jittered(const Color& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  return {base[0] + u(rng), base[1] + u(rng), base[2] + u(rng)};
}

Color background_color(std::mt19937_64& rng) { return jittered({200.0, 180.0, 140.0}, rng); }
Color foreground_color(std::mt19937_64& rng) { return jittered({50.0, 100.0, 50.0}, rng); }

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void fill(Raster8& out, int size, std::mt19937_64& rng, const Color& bg, const Color& fg, auto&& weight) {
  std::normal_distribution<double> noise(0.0, 12.0);
  out.width = out.height = size;
  out.channels = 3;
  out.pixels.assign(static_cast<std::size_t>(size) * size * 3, 0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double t = weight(x, y);
      auto* px = out.pixel(y, x);
      for (int c = 0; c < 3; ++c) px[c] = to_byte(bg[c] + t * (fg[c] - bg[c]) + noise(rng));
    }
  }
}

struct Blob {
  double cx, cy, r;
};

MarkerSet tile_markers(const SyntheticTile& tile, std::mt19937_64& rng, const std::vector<Blob>& blobs) {
  const double s = tile.rgb.width;
  std::vector<Stroke> strokes;
  if (tile.label == 1) {
    std::uniform_real_distribution<double> u(0.2 * s, 0.8 * s);
    for (int i = 0; i < 2; ++i) {
      strokes.push_back({fmt::format("s{}", i), {{u(rng), u(rng)}, {u(rng), u(rng)}}, 1.5, 1});
    }
  } else {
    for (std::size_t i = 0; i < std::min<std::size_t>(2, blobs.size()); ++i) {
      const auto& b = blobs[i];
      // across the blob boundary: center to outside rim
      strokes.push_back({fmt::format("s{}", i), {{b.cx, b.cy}, {b.cx + 1.4 * b.r, b.cy}}, 1.5, 2});
    }
  }
  auto m = rasterize_strokes(strokes, tile.rgb.width, tile.rgb.height);
  m.image_id = tile.id;
  return m;
}

Raster8 blobs_with_layout(int size, std::mt19937_64& rng, std::vector<Blob>& blobs) {
  std::uniform_int_distribution<int> count(3, 6);
  std::uniform_real_distribution<double> pos(0.15 * size, 0.85 * size);
  std::uniform_real_distribution<double> radius(0.08 * size, 0.16 * size);
  const Color bg = background_color(rng);
  const Color fg = foreground_color(rng);
  blobs.clear();
  const int n = count(rng);
  for (int i = 0; i < n; ++i) blobs.push_back({pos(rng), pos(rng), radius(rng)});
  Raster8 out;
  fill(out, size, rng, bg, fg, [&](int x, int y) {
    double t = 0.0;
    for (const auto& b : blobs) {
      const double d = std::hypot(x - b.cx, y - b.cy);
      // soft edge over about one pixel
      t = std::max(t, std::clamp(b.r - d + 0.5, 0.0, 1.0));
    }
    return t;
  });
  return out;
}

}  // namespace

Raster8 stripes_tile(int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> period(6.0, 12.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double th = angle(rng);
  const double p = period(rng);
  const double ph = phase(rng);
  const Color bg = background_color(rng);
  const Color fg = foreground_color(rng);
  Raster8 out;
  fill(out, size, rng, bg, fg, [&](int x, int y) {
    return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (x * std::cos(th) + y * std::sin(th)) / p + ph);
  });
  return out;
}

Raster8 blobs_tile(int size, std::mt19937_64& rng) {
  std::vector<Blob> blobs;
  return blobs_with_layout(size, rng, blobs);
}

SyntheticDataset make_synthetic(const SyntheticOptions& options) {
  SyntheticDataset out;
  std::mt19937_64 rng(options.seed);
  std::vector<Blob> blobs;
  for (int label = 1; label <= 2; ++label) {
    for (int i = 0; i < options.tiles_per_class; ++i) {
      SyntheticTile tile;
      tile.id = fmt::format("c{}_{:04d}", label, i);
      tile.label = label;
      tile.rgb = label == 1 ? stripes_tile(options.size, rng) : blobs_with_layout(options.size, rng, blobs);
      if (i < options.marked_per_class) out.markers.push_back(tile_markers(tile, rng, blobs));
      out.tiles.push_back(std::move(tile));
    }
  }
  return out;
}

SyntheticDataset write_synthetic(const std::filesystem::path& dir, const SyntheticOptions& options) {
  auto data = make_synthetic(options);
  for (const auto& tile : data.tiles) {
    const auto folder = dir / "dataset" / std::to_string(tile.label);
    std::filesystem::create_directories(folder);
    write_png(folder / (tile.id + ".png"), tile.rgb);
  }
  std::filesystem::create_directories(dir / "markers");
  for (const auto& m : data.markers) save_markers(dir / "markers" / (m.image_id + ".tsv"), m);
  return data;
}

}  // namespace flim
