#include "flim/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "flim/errors.hpp"

namespace flim {
namespace {

// Linear sRGB to XYZ and the D65 reference white (2 degree observer).
constexpr double kRgbToXyz[3][3] = {
    {0.412453, 0.357580, 0.180423},
    {0.212671, 0.715160, 0.072169},
    {0.019334, 0.119193, 0.950227},
};
constexpr double kWhite[3] = {0.95047, 1.0, 1.08883};

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 invert(const double (&m)[3][3]) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 inv{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int r1 = (c + 1) % 3, r2 = (c + 2) % 3, c1 = (r + 1) % 3, c2 = (r + 2) % 3;
      inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
    }
  }
  return inv;
}

const Mat3 kXyzToRgb = invert(kRgbToXyz);

constexpr double kDelta = 6.0 / 29.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
  return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

bool is_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

Raster8 decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("cannot decode PNG: ") + image.message);
  }
  const auto fmt = image.format;
  if ((fmt & PNG_FORMAT_FLAG_COLOR) == 0 || (fmt & PNG_FORMAT_FLAG_ALPHA) != 0) {
    png_image_free(&image);
    throw FormatError("PNG must have exactly 3 color channels");
  }
  if ((fmt & PNG_FORMAT_FLAG_LINEAR) != 0) {
    png_image_free(&image);
    throw FormatError("PNG must be 8 bits per channel");
  }
  image.format = PNG_FORMAT_RGB;
  Raster8 out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = 3;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("cannot decode PNG: ") + image.message);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Raster8 decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  Raster8 out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("cannot decode JPEG: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.num_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError("JPEG must have exactly 3 color channels");
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.channels = 3;
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

Lab rgb_to_lab(double r, double g, double b) {
  const double rgb[3] = {srgb_to_linear(r / 255.0), srgb_to_linear(g / 255.0),
                         srgb_to_linear(b / 255.0)};
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = kRgbToXyz[i][0] * rgb[0] + kRgbToXyz[i][1] * rgb[1] + kRgbToXyz[i][2] * rgb[2];
  }
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::array<double, 3> lab_to_rgb(const Lab& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double xyz[3] = {kWhite[0] * lab_f_inv(fx), kWhite[1] * lab_f_inv(fy),
                         kWhite[2] * lab_f_inv(fz)};
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double lin = kXyzToRgb[i][0] * xyz[0] + kXyzToRgb[i][1] * xyz[1] + kXyzToRgb[i][2] * xyz[2];
    out[i] = 255.0 * linear_to_srgb(lin);
  }
  return out;
}

std::array<double, 3> BandRanges::normalize_unclamped(const Lab& lab) const {
  const double v[3] = {lab.L, lab.a, lab.b};
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = (v[i] - lower[i]) / (upper[i] - lower[i]);
  return out;
}

std::array<float, 3> BandRanges::normalize(const Lab& lab) const {
  const auto unit = normalize_unclamped(lab);
  std::array<float, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = static_cast<float>(std::clamp(unit[i], 0.0, 1.0));
  return out;
}

Lab BandRanges::denormalize(std::span<const double, 3> unit) const {
  double v[3];
  for (int i = 0; i < 3; ++i) v[i] = lower[i] + unit[i] * (upper[i] - lower[i]);
  return {v[0], v[1], v[2]};
}

Raster8 decode_rgb(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  throw FormatError("unsupported image format (expected 8-bit PNG or JPEG)");
}

Raster8 decode_rgb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read image " + path.string());
  try {
    return decode_rgb(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Raster8& raster) {
  if (raster.channels != 1 && raster.channels != 3) {
    throw FormatError("PNG encoder supports 1 or 3 channels");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("cannot encode PNG: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("cannot encode PNG: ") + image.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Raster8& raster) {
  const auto bytes = encode_png(raster);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

Image lab_image_from_rgb(const Raster8& rgb, std::string id, const BandRanges& ranges) {
  if (rgb.channels != 3) throw FormatError("expected a 3-channel raster");
  Image image{std::move(id), Tensor3(rgb.height, rgb.width, 3)};
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      const std::uint8_t* p = rgb.pixel(y, x);
      const auto unit = ranges.normalize(rgb_to_lab(p[0], p[1], p[2]));
      auto dst = image.data.pixel(y, x);
      std::copy(unit.begin(), unit.end(), dst.begin());
    }
  }
  return image;
}

Image load_image(const std::filesystem::path& path, const BandRanges& ranges) {
  if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
  return lab_image_from_rgb(decode_rgb(path), path.stem().string(), ranges);
}

Raster8 resize_to_fit(const Raster8& raster, int max_side) {
  const int longest = std::max(raster.width, raster.height);
  if (longest <= max_side || longest == 0) return raster;
  const double scale = static_cast<double>(max_side) / longest;
  Raster8 out;
  out.width = std::max(1, static_cast<int>(std::lround(raster.width * scale)));
  out.height = std::max(1, static_cast<int>(std::lround(raster.height * scale)));
  out.channels = raster.channels;
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  const double sx = static_cast<double>(raster.width) / out.width;
  const double sy = static_cast<double>(raster.height) / out.height;
  for (int y = 0; y < out.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, raster.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, raster.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, raster.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, raster.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < raster.channels; ++c) {
        const double top = raster.pixel(y0, x0)[c] * (1 - wx) + raster.pixel(y0, x1)[c] * wx;
        const double bottom = raster.pixel(y1, x0)[c] * (1 - wx) + raster.pixel(y1, x1)[c] * wx;
        out.pixel(y, x)[c] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
      }
    }
  }
  return out;
}

}  // namespace flim
