#include "flim/markers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "flim/errors.hpp"

namespace flim {
namespace {

constexpr std::string_view kHeaderTag = "#flim-markers v1";

// Squared distance from (px, py) to segment a-b.
double segment_distance2(double px, double py, const StrokePoint& a, const StrokePoint& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0, 1.0);
  const double ex = a.x + t * dx - px;
  const double ey = a.y + t * dy - py;
  return ex * ex + ey * ey;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string header_value(std::string_view header, std::string_view key, std::size_t line) {
  const std::string needle = " " + std::string(key) + "=";
  const auto pos = header.find(needle);
  if (pos == std::string_view::npos) throw ParseError("header is missing " + std::string(key) + "=", line);
  const auto start = pos + needle.size();
  const auto end = header.find(' ', start);
  return std::string(header.substr(start, end == std::string_view::npos ? header.size() - start : end - start));
}

}  // namespace

std::vector<std::size_t> MarkerSet::counts_per_label() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_label()) + 1, 0);
  for (const auto& p : pixels) ++counts[static_cast<std::size_t>(p.label)];
  return counts;
}

int MarkerSet::max_label() const {
  int m = 0;
  for (const auto& p : pixels) m = std::max(m, p.label);
  return m;
}

void MarkerSet::validate(int classes) const {
  std::map<std::pair<int, int>, int> seen;
  for (const auto& p : pixels) {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
      throw ValidationError("marker pixel (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                            ") outside " + std::to_string(width) + "x" + std::to_string(height) +
                            " image '" + image_id + "'");
    }
    if (p.label < 1 || (classes > 0 && p.label > classes)) {
      throw ValidationError("marker label " + std::to_string(p.label) + " outside 1.." +
                            (classes > 0 ? std::to_string(classes) : std::string("c")));
    }
    auto [it, inserted] = seen.emplace(std::pair{p.x, p.y}, p.label);
    if (!inserted && it->second != p.label) {
      throw ValidationError("marker pixel (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                            ") has conflicting labels");
    }
  }
  if (!stroke_ids.empty() && stroke_ids.size() != pixels.size()) {
    throw ValidationError("stroke provenance does not match pixel count");
  }
}

MarkerSet rasterize_strokes(const std::vector<Stroke>& strokes, int width, int height) {
  // label and owning stroke per pixel; 0 = unmarked
  std::vector<int> label(static_cast<std::size_t>(width) * height, 0);
  std::vector<int> owner(label.size(), -1);
  constexpr double kEps = 1e-9;
  for (std::size_t s = 0; s < strokes.size(); ++s) {
    const Stroke& stroke = strokes[s];
    if (stroke.points.empty()) throw ValidationError("stroke '" + stroke.id + "' has no points");
    if (!(stroke.radius >= 0.0)) throw ValidationError("stroke '" + stroke.id + "' has a negative radius");
    if (stroke.label < 1) throw ValidationError("stroke '" + stroke.id + "' has a label below 1");
    double min_x = stroke.points[0].x, max_x = min_x, min_y = stroke.points[0].y, max_y = min_y;
    for (const auto& p : stroke.points) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - stroke.radius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x + stroke.radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - stroke.radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y + stroke.radius)));
    const double r2 = stroke.radius * stroke.radius + kEps;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        bool hit = false;
        if (stroke.points.size() == 1) {
          hit = segment_distance2(x, y, stroke.points[0], stroke.points[0]) <= r2;
        }
        for (std::size_t i = 1; !hit && i < stroke.points.size(); ++i) {
          hit = segment_distance2(x, y, stroke.points[i - 1], stroke.points[i]) <= r2;
        }
        if (hit) {
          const auto idx = static_cast<std::size_t>(y) * width + x;
          label[idx] = stroke.label;
          owner[idx] = static_cast<int>(s);
        }
      }
    }
  }
  MarkerSet out;
  out.width = width;
  out.height = height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto idx = static_cast<std::size_t>(y) * width + x;
      if (label[idx] == 0) continue;
      out.pixels.push_back({x, y, label[idx]});
      out.stroke_ids.push_back(strokes[static_cast<std::size_t>(owner[idx])].id);
    }
  }
  if (out.pixels.empty()) throw EmptyStrokeError("strokes produce no marker pixels inside the image");
  return out;
}

StrokePayload parse_stroke_payload(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("stroke payload is not valid JSON: ") + e.what());
  }
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("stroke payload: " + what);
  };
  require(doc.is_object(), "expected an object");
  require(doc.contains("v") && doc["v"] == 1, "\"v\" must be 1");
  require(doc.contains("strokes") && doc["strokes"].is_array(), "\"strokes\" must be an array");
  StrokePayload payload;
  require(doc.contains("image_id") && doc["image_id"].is_string(), "\"image_id\" must be a string");
  payload.image_id = doc["image_id"].get<std::string>();
  std::size_t index = 0;
  for (const auto& s : doc["strokes"]) {
    const std::string where = "stroke " + std::to_string(index++);
    require(s.is_object(), where + " must be an object");
    Stroke stroke;
    if (s.contains("id")) {
      require(s["id"].is_string() || s["id"].is_number_integer(), where + " id must be a string or integer");
      stroke.id = s["id"].is_string() ? s["id"].get<std::string>() : std::to_string(s["id"].get<long long>());
    } else {
      stroke.id = std::to_string(index - 1);
    }
    require(s.contains("label") && s["label"].is_number_integer() && s["label"].get<int>() >= 1,
            where + " needs an integer label >= 1");
    stroke.label = s["label"].get<int>();
    require(s.contains("radius") && s["radius"].is_number() && s["radius"].get<double>() >= 0,
            where + " needs a radius >= 0");
    stroke.radius = s["radius"].get<double>();
    require(s.contains("points") && s["points"].is_array() && !s["points"].empty(),
            where + " needs a non-empty points array");
    for (const auto& p : s["points"]) {
      require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(),
              where + " points must be [x, y] pairs");
      stroke.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    payload.strokes.push_back(std::move(stroke));
  }
  return payload;
}

std::string serialize_stroke_payload(const StrokePayload& payload) {
  nlohmann::json doc;
  doc["v"] = 1;
  doc["image_id"] = payload.image_id;
  doc["strokes"] = nlohmann::json::array();
  for (const auto& s : payload.strokes) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : s.points) points.push_back({p.x, p.y});
    doc["strokes"].push_back({{"id", s.id}, {"label", s.label}, {"radius", s.radius}, {"points", points}});
  }
  return doc.dump();
}

std::string format_markers(const MarkerSet& markers) {
  std::ostringstream out;
  out << kHeaderTag << " image=" << markers.image_id << " width=" << markers.width
      << " height=" << markers.height << '\n';
  for (const auto& p : markers.pixels) out << p.x << '\t' << p.y << '\t' << p.label << '\n';
  return out.str();
}

MarkerSet parse_markers(std::string_view text) {
  MarkerSet markers;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!have_header) {
      if (!line.starts_with(kHeaderTag)) throw ParseError("missing '#flim-markers v1' header", line_no, 1);
      markers.image_id = header_value(line, "image", line_no);
      const auto w = parse_number<int>(header_value(line, "width", line_no));
      const auto h = parse_number<int>(header_value(line, "height", line_no));
      if (!w || !h || *w <= 0 || *h <= 0) throw ParseError("header width/height must be positive integers", line_no);
      markers.width = *w;
      markers.height = *h;
      have_header = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    std::string_view fields[3];
    std::size_t columns[3];
    std::size_t start = 0;
    for (int f = 0; f < 3; ++f) {
      const auto tab = f < 2 ? line.find('\t', start) : std::string_view::npos;
      if (f < 2 && tab == std::string_view::npos) throw ParseError("expected x<TAB>y<TAB>label", line_no, start + 1);
      fields[f] = line.substr(start, tab == std::string_view::npos ? line.size() - start : tab - start);
      columns[f] = start + 1;
      start = tab + 1;
    }
    const auto x = parse_number<int>(fields[0]);
    const auto y = parse_number<int>(fields[1]);
    const auto label = parse_number<int>(fields[2]);
    if (!x) throw ParseError("x is not an integer", line_no, columns[0]);
    if (!y) throw ParseError("y is not an integer", line_no, columns[1]);
    if (!label) throw ParseError("label is not an integer", line_no, columns[2]);
    if (*label < 1) throw ParseError("labels are 1-based", line_no, columns[2]);
    if (*x < 0 || *x >= markers.width) throw ParseError("x outside image width", line_no, columns[0]);
    if (*y < 0 || *y >= markers.height) throw ParseError("y outside image height", line_no, columns[1]);
    markers.pixels.push_back({*x, *y, *label});
  }
  if (!have_header) throw ParseError("empty marker file", 1, 1);
  try {
    markers.validate();
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return markers;
}

void save_markers(const std::filesystem::path& path, const MarkerSet& markers) {
  markers.validate();
  std::ofstream out(path, std::ios::binary);
  out << format_markers(markers);
  if (!out) throw IoError("cannot write " + path.string());
}

MarkerSet load_markers(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read marker file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_markers(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.filename().string() + ": " + e.detail(), e.line(), e.column());
  }
}

std::vector<MarkerSet> load_marker_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("marker directory not found: " + dir.string());
  std::vector<MarkerSet> sets;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tsv") sets.push_back(load_markers(entry.path()));
  }
  std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 1; i < sets.size(); ++i) {
    if (sets[i].image_id == sets[i - 1].image_id) {
      throw DuplicateIdError("two marker files for image '" + sets[i].image_id + "'");
    }
  }
  return sets;
}

}  // namespace flim
