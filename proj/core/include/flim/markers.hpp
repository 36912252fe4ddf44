#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flim {

/// One labeled marker pixel; x is the column, y the row, label is 1-based.
struct MarkerPixel {
  int x = 0;
  int y = 0;
  int label = 0;

  friend bool operator==(const MarkerPixel&, const MarkerPixel&) = default;
};

/// Labeled marker pixels drawn on one image, stored at input resolution.
struct MarkerSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<MarkerPixel> pixels;
  /// Optional provenance, parallel to `pixels` when non-empty.
  std::vector<std::string> stroke_ids;

  /// Pixel count per label, indexed 1..max label (index 0 unused).
  std::vector<std::size_t> counts_per_label() const;
  int max_label() const;

  /// Throws ValidationError if a pixel lies outside width x height, a label is
  /// outside 1..classes (classes <= 0 skips the upper bound), or the same
  /// pixel carries two different labels.
  void validate(int classes = 0) const;

  friend bool operator==(const MarkerSet& a, const MarkerSet& b) {
    return a.image_id == b.image_id && a.width == b.width && a.height == b.height && a.pixels == b.pixels;
  }
};

struct StrokePoint {
  double x = 0.0;
  double y = 0.0;
};

/// A brush stroke: every pixel whose center lies within `radius` of the
/// polyline is marked with `label`.
struct Stroke {
  std::string id;
  std::vector<StrokePoint> points;
  double radius = 0.0;
  int label = 0;
};

/// Rasterizes strokes into marker pixels clipped to width x height. Later
/// strokes overwrite earlier labels. Pixels are returned in (y, x) order.
/// Throws EmptyStrokeError when no pixel is produced, ValidationError for a
/// stroke without points, a negative radius, or a label below 1.
MarkerSet rasterize_strokes(const std::vector<Stroke>& strokes, int width, int height);

/// The browser's stroke document for one image (`"v": 1` JSON).
struct StrokePayload {
  std::string image_id;
  std::vector<Stroke> strokes;
};

/// Throws ValidationError with a description of the first schema violation.
StrokePayload parse_stroke_payload(std::string_view json);
std::string serialize_stroke_payload(const StrokePayload& payload);

/// Marker file: header `#flim-markers v1 image=<id> width=<W> height=<H>`
/// followed by `x<TAB>y<TAB>label` lines.
std::string format_markers(const MarkerSet& markers);
MarkerSet parse_markers(std::string_view text);
void save_markers(const std::filesystem::path& path, const MarkerSet& markers);
/// Throws IoError for unreadable files and ParseError (with line/column)
/// for malformed content, zero labels, or pixels outside the header's bounds.
MarkerSet load_markers(const std::filesystem::path& path);

/// Loads every `*.tsv` marker file in `dir`, ordered by image id.
std::vector<MarkerSet> load_marker_dir(const std::filesystem::path& dir);

}  // namespace flim
