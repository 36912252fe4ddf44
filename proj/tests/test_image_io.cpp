#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <fstream>

#include "flim/dataset.hpp"
#include "flim/errors.hpp"
#include "flim/image_io.hpp"
#include "support.hpp"

using namespace flim;
using flim::testing::TempDir;

namespace {

struct LabRef {
  int r, g, b;
  double L, a, bb;
};

// scikit-image rgb2lab (D65, 2 degree observer) on a 5x5x4 sRGB grid.
constexpr LabRef kLabGrid[] = {
    {0, 0, 0, 0.000000, 0.000000, 0.000000},
    {0, 0, 85, 5.921942, 34.685198, -48.120896},
    {0, 0, 170, 19.643108, 58.440445, -79.600701},
    {0, 0, 255, 32.295673, 79.185591, -107.857300},
    {0, 64, 0, 22.537065, -32.016560, 30.116241},
    {0, 64, 85, 24.709179, -9.564485, -17.710540},
    {0, 64, 170, 30.801596, 26.888413, -61.110174},
    {0, 64, 255, 39.383535, 58.055090, -96.045686},
    {0, 128, 0, 46.227658, -51.698683, 49.897076},
    {0, 128, 85, 47.096364, -41.090044, 15.063796},
    {0, 128, 170, 49.904140, -14.040329, -30.525031},
    {0, 128, 255, 54.714539, 18.773464, -70.913764},
    {0, 191, 0, 67.471280, -69.347866, 66.931215},
    {0, 191, 85, 67.958006, -63.166643, 41.825634},
    {0, 191, 170, 69.583731, -44.810707, -0.759723},
    {0, 191, 255, 72.545792, -17.662129, -42.536470},
    {0, 255, 0, 87.735099, -86.183030, 83.179703},
    {0, 255, 85, 88.051120, -82.112547, 64.673876},
    {0, 255, 170, 89.119215, -69.231648, 26.820216},
    {0, 255, 255, 91.113301, -48.090596, -14.126330},
    {51, 0, 0, 6.359559, 25.169953, 10.049269},
    {51, 0, 85, 11.686353, 38.754399, -38.394087},
    {51, 0, 170, 22.320349, 59.451911, -75.063510},
    {51, 0, 255, 33.817692, 79.698533, -105.276031},
    {51, 64, 0, 24.860716, -14.694563, 33.207048},
    {51, 64, 85, 26.809348, 0.774745, -14.291979},
    {51, 64, 170, 32.417522, 30.845314, -58.402008},
    {51, 64, 255, 40.552907, 59.660762, -94.072247},
    {51, 128, 0, 47.159616, -43.634901, 51.031890},
    {51, 128, 85, 48.003380, -34.276052, 16.449500},
    {51, 128, 170, 50.736957, -9.658629, -29.164535},
    {51, 128, 255, 55.439623, 21.266844, -69.705764},
    {51, 191, 0, 67.993750, -64.670803, 67.568439},
    {51, 191, 85, 68.474492, -58.830261, 42.568380},
    {51, 191, 170, 70.080951, -41.352279, 0.026329},
    {51, 191, 255, 73.010562, -15.202754, -41.776272},
    {51, 255, 0, 88.074397, -83.108492, 83.593753},
    {51, 255, 85, 88.388369, -79.160343, 65.136365},
    {51, 255, 170, 89.449677, -66.636200, 27.324270},
    {51, 255, 255, 91.431629, -45.992885, -13.617142},
    {102, 0, 0, 19.331974, 40.869372, 29.656616},
    {102, 0, 85, 21.876742, 47.504239, -21.456598},
    {102, 0, 170, 28.712359, 63.112370, -64.279568},
    {102, 0, 255, 37.918821, 81.510807, -98.334293},
    {102, 64, 0, 30.622020, 11.709331, 40.381445},
    {102, 64, 85, 32.141276, 19.989396, -5.703453},
    {102, 64, 170, 36.730845, 40.282359, -51.199527},
    {102, 64, 255, 43.812984, 64.057191, -88.580049},
    {102, 128, 0, 49.813801, -24.757465, 54.230274},
    {102, 128, 85, 50.592069, -17.810056, 20.380038},
    {102, 128, 170, 53.128775, 1.647730, -25.267446},
    {102, 128, 255, 57.540241, 28.080417, -66.210906},
    {102, 191, 0, 69.530202, -52.153287, 69.433838},
    {102, 191, 85, 69.993966, -47.136775, 44.745460},
    {102, 191, 170, 71.545656, -31.841645, 2.337456},
    {102, 191, 255, 74.382621, -8.282608, -39.534499},
    {102, 255, 0, 89.083743, -74.425789, 84.822500},
    {102, 255, 85, 89.391739, -70.803645, 66.509254},
    {102, 255, 170, 90.433231, -59.239218, 28.822368},
    {102, 255, 255, 92.379702, -39.957272, -12.101937},
    {153, 0, 0, 31.288095, 54.699314, 45.135821},
    {153, 0, 85, 32.766780, 58.657430, -3.833281},
    {153, 0, 170, 37.253802, 69.779208, -49.991505},
    {153, 0, 255, 44.220691, 85.269843, -87.708955},
    {153, 64, 0, 38.622823, 34.589086, 49.338361},
    {153, 64, 85, 39.742944, 39.275431, 6.299307},
    {153, 64, 170, 43.274376, 52.542595, -40.351575},
    {153, 64, 255, 49.078709, 70.960199, -79.740148},
    {153, 128, 0, 54.251269, -1.222099, 59.474968},
    {153, 128, 85, 54.935741, 3.528904, 26.893338},
    {153, 128, 170, 57.185433, 17.672910, -18.693320},
    {153, 128, 255, 61.158343, 38.647377, -60.208538},
    {153, 191, 0, 72.251274, -33.399445, 72.707336},
    {153, 191, 85, 72.687091, -29.410365, 48.574763},
    {153, 191, 170, 74.148249, -16.958062, 6.427610},
    {153, 191, 255, 76.830794, 2.984325, -35.543592},
    {153, 255, 0, 90.912331, -60.193024, 87.037438},
    {153, 255, 85, 91.209926, -57.048476, 68.985339},
    {153, 255, 170, 92.216883, -46.913774, 31.531044},
    {153, 255, 255, 94.101356, -29.721701, -9.355419},
    {204, 0, 0, 42.523686, 67.695801, 56.801261},
    {204, 0, 85, 43.503125, 70.344182, 12.963517},
    {204, 0, 170, 46.635080, 78.426924, -34.485467},
    {204, 0, 255, 51.903352, 90.993250, -74.830490},
    {204, 64, 0, 47.634349, 53.332682, 58.968898},
    {204, 64, 85, 48.465813, 56.310556, 19.694241},
    {204, 64, 170, 51.162642, 65.410412, -27.412816},
    {204, 64, 255, 55.811545, 79.531087, -68.497760},
    {204, 128, 0, 60.140087, 21.891038, 66.260963},
    {204, 128, 85, 60.723983, 25.141318, 35.411620},
    {204, 128, 170, 62.659433, 35.258728, -9.896148},
    {204, 128, 255, 66.133048, 51.389961, -51.992533},
    {204, 191, 0, 76.131320, -11.696161, 77.312253},
    {204, 191, 85, 76.531440, -8.643502, 53.976485},
    {204, 191, 170, 77.876303, 1.095820, 12.249303},
    {204, 191, 255, 80.358166, 17.306672, -29.814366},
    {204, 255, 0, 93.605620, -41.945850, 90.274456},
    {204, 255, 85, 93.888826, -39.323953, 72.606418},
    {204, 255, 170, 94.847921, -30.786296, 35.507439},
    {204, 255, 255, 96.646127, -16.018782, -5.307780},
};

const std::filesystem::path kData = FLIM_TEST_DATA;

}  // namespace

TEST(Lab, MatchesReferenceGrid) {
  double worst = 0.0;
  for (const auto& ref : kLabGrid) {
    const auto lab = rgb_to_lab(ref.r, ref.g, ref.b);
    worst = std::max({worst, std::abs(lab.L - ref.L), std::abs(lab.a - ref.a), std::abs(lab.b - ref.bb)});
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Lab, PureRed) {
  const auto lab = rgb_to_lab(255, 0, 0);
  EXPECT_NEAR(lab.L, 53.24058794, 1e-3);
  EXPECT_NEAR(lab.a, 80.09230823, 1e-3);
  EXPECT_NEAR(lab.b, 67.20275104, 1e-3);
}

TEST(Lab, WhiteIsNearlyNeutral) {
  const auto lab = rgb_to_lab(255, 255, 255);
  EXPECT_NEAR(lab.L, 100.0, 1e-3);
  EXPECT_NEAR(lab.a, 0.0, 1e-2);
  EXPECT_NEAR(lab.b, 0.0, 1e-2);
}

TEST(Lab, InverseRecoversRgb) {
  for (const auto& ref : kLabGrid) {
    const auto rgb = lab_to_rgb(rgb_to_lab(ref.r, ref.g, ref.b));
    EXPECT_NEAR(rgb[0], ref.r, 1e-6);
    EXPECT_NEAR(rgb[1], ref.g, 1e-6);
    EXPECT_NEAR(rgb[2], ref.b, 1e-6);
  }
}

TEST(BandRanges, NormalizationRoundTrip) {
  const BandRanges ranges;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> L(0, 100), ab(-128, 127);
  for (int i = 0; i < 1000; ++i) {
    const Lab lab{L(rng), ab(rng), ab(rng)};
    const auto unit = ranges.normalize_unclamped(lab);
    const auto back = ranges.denormalize(std::span<const double, 3>(unit));
    EXPECT_NEAR(back.L, lab.L, 1e-6);
    EXPECT_NEAR(back.a, lab.a, 1e-6);
    EXPECT_NEAR(back.b, lab.b, 1e-6);
  }
}

TEST(BandRanges, FixedRangesAndClamp) {
  const BandRanges ranges;
  const auto mid = ranges.normalize({50.0, -0.5, -0.5});
  EXPECT_FLOAT_EQ(mid[0], 0.5f);
  EXPECT_FLOAT_EQ(mid[1], 127.5f / 255.0f);
  const auto out = ranges.normalize({120.0, -200.0, 300.0});
  EXPECT_EQ(out[0], 1.0f);
  EXPECT_EQ(out[1], 0.0f);
  EXPECT_EQ(out[2], 1.0f);
}

TEST(Png, RoundTripThroughFile) {
  TempDir dir;
  const auto raster = flim::testing::noise_raster(7, 5, 11);
  write_png(dir / "a.png", raster);
  const auto back = decode_rgb(dir / "a.png");
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.channels, 3);
  EXPECT_EQ(back.pixels, raster.pixels);
}

TEST(Png, RejectsGrayAlphaAndSixteenBit) {
  EXPECT_THROW(decode_rgb(kData / "gray_5x6.png"), FormatError);
  EXPECT_THROW(decode_rgb(kData / "rgba_5x6.png"), FormatError);
  EXPECT_THROW(decode_rgb(kData / "rgb16_5x6.png"), FormatError);
}

TEST(Decode, MissingFileAndGarbage) {
  TempDir dir;
  EXPECT_THROW(decode_rgb(dir / "nope.png"), IoError);
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_THROW(decode_rgb(dir / "junk.png"), FormatError);
}

TEST(Jpeg, DecodesRgb) {
  const auto r = decode_rgb(kData / "noise_5x6.jpg");
  EXPECT_EQ(r.width, 5);
  EXPECT_EQ(r.height, 6);
  EXPECT_EQ(r.channels, 3);
  // decoders may differ by a few levels in the IDCT
  EXPECT_NEAR(r.pixel(0, 0)[0], 170, 4);
  EXPECT_NEAR(r.pixel(0, 0)[1], 231, 4);
  EXPECT_NEAR(r.pixel(5, 4)[2], 124, 4);
}

TEST(LoadImage, ShapeFollowsRaster) {
  TempDir dir;
  write_png(dir / "tile_7.png", flim::testing::noise_raster(9, 4, 2));
  const auto img = load_image(dir / "tile_7.png");
  EXPECT_EQ(img.id, "tile_7");
  EXPECT_EQ(img.height(), 4);
  EXPECT_EQ(img.width(), 9);
  EXPECT_EQ(img.bands(), 3);
  for (float v : img.data.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(LoadImage, PixelUsesLabNormalization) {
  TempDir dir;
  write_png(dir / "red.png", flim::testing::solid_raster(2, 2, 255, 0, 0));
  const auto img = load_image(dir / "red.png");
  EXPECT_NEAR(img.data.at(1, 1, 0), 53.24058794 / 100.0, 1e-5);
  EXPECT_NEAR(img.data.at(1, 1, 1), (80.09230823 + 128.0) / 255.0, 1e-5);
  EXPECT_NEAR(img.data.at(1, 1, 2), (67.20275104 + 128.0) / 255.0, 1e-5);
}

TEST(Resize, ShrinksLongerSideOnly) {
  const auto big = flim::testing::noise_raster(300, 150, 1);
  const auto small = resize_to_fit(big, 128);
  EXPECT_EQ(small.width, 128);
  EXPECT_EQ(small.height, 64);
  const auto tiny = flim::testing::noise_raster(20, 10, 1);
  EXPECT_EQ(resize_to_fit(tiny, 128).pixels, tiny.pixels);
}

TEST(Dataset, DirectoryLayout) {
  TempDir dir;
  std::filesystem::create_directories(dir / "1");
  std::filesystem::create_directories(dir / "2");
  write_png(dir / "1/a.png", flim::testing::solid_raster(3, 3, 1, 2, 3));
  write_png(dir / "2/b.png", flim::testing::solid_raster(3, 3, 4, 5, 6));
  const auto ds = load_dataset(dir.path());
  ASSERT_EQ(ds.entries.size(), 2u);
  EXPECT_EQ(ds.classes, 2);
  EXPECT_EQ(ds.at("a").label, 1);
  EXPECT_EQ(ds.at("b").label, 2);
}

TEST(Dataset, EmptyDirectoryIsLayoutError) {
  TempDir dir;
  EXPECT_THROW(load_dataset(dir.path()), LayoutError);
}

TEST(Dataset, ManifestIsAuthoritative) {
  TempDir dir;
  write_png(dir / "x.png", flim::testing::solid_raster(3, 3, 1, 2, 3));
  write_png(dir / "y.png", flim::testing::solid_raster(3, 3, 9, 9, 9));
  std::ofstream(dir / "manifest.tsv") << "x\tx.png\t1\ny\ty.png\t2\n";
  const auto ds = load_dataset(dir.path());
  ASSERT_EQ(ds.entries.size(), 2u);
  EXPECT_EQ(ds.at("y").label, 2);
}

TEST(Dataset, ManifestConflictingDuplicate) {
  TempDir dir;
  write_png(dir / "x.png", flim::testing::solid_raster(3, 3, 1, 2, 3));
  write_png(dir / "y.png", flim::testing::solid_raster(3, 3, 9, 9, 9));
  std::ofstream(dir / "manifest.tsv") << "x\tx.png\t1\nx\ty.png\t2\n";
  EXPECT_THROW(load_dataset(dir.path()), DuplicateIdError);
}

TEST(Dataset, ManifestBadLine) {
  TempDir dir;
  std::ofstream(dir / "manifest.tsv") << "x\tx.png\n";
  try {
    load_dataset(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
  }
}
