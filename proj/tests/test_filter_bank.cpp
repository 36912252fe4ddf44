#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "flim/errors.hpp"
#include "flim/filter_bank.hpp"
#include "support.hpp"

using namespace flim;

namespace {

PatchSets random_patches(std::mt19937_64& rng, int k, int m, std::vector<int> per_class) {
  PatchSets sets(k, m);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (int i = 0; i < per_class[c]; ++i) {
      Patch p;
      p.label = static_cast<int>(c) + 1;
      p.values.resize(sets.dimension());
      for (auto& v : p.values) v = g(rng) * (1.0f + static_cast<float>(c)) + 0.5f * static_cast<float>(c);
      sets.add(std::move(p));
    }
  }
  return sets;
}

}  // namespace

TEST(MarkerStats, StandardizedSetHasZeroMeanUnitStd) {
  std::mt19937_64 rng(3);
  const auto sets = random_patches(rng, 3, 2, {40, 25});
  const auto all = sets.all();
  const auto stats = compute_marker_stats(all);
  ASSERT_EQ(stats.floored, 0u);
  const std::size_t d = sets.dimension();
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  std::vector<float> z(d);
  for (const auto& p : all) {
    stats.standardize(p, z);
    for (std::size_t j = 0; j < d; ++j) {
      sum[j] += z[j];
      sq[j] += static_cast<double>(z[j]) * z[j];
    }
  }
  const double n = static_cast<double>(all.size());
  for (std::size_t j = 0; j < d; ++j) {
    const double mean = sum[j] / n;
    EXPECT_LE(std::abs(mean), 1e-6);
    EXPECT_LE(std::abs(std::sqrt(sq[j] / n - mean * mean) - 1.0), 1e-6);
  }
}

TEST(MarkerStats, FloorsConstantComponents) {
  std::vector<std::vector<float>> rows{{1.0f, 2.0f}, {1.0f, 4.0f}, {1.0f, 6.0f}};
  std::vector<std::span<const float>> spans(rows.begin(), rows.end());
  const auto stats = compute_marker_stats(spans);
  EXPECT_EQ(stats.floored, 1u);
  EXPECT_EQ(stats.std[0], kStdFloor);
  EXPECT_FLOAT_EQ(stats.mean[1], 4.0f);
  EXPECT_NEAR(stats.std[1], std::sqrt(8.0f / 3.0f), 1e-6);
}

TEST(MarkerStats, NeedsTwoPatches) {
  std::vector<float> one{1.0f};
  std::vector<std::span<const float>> spans{one};
  EXPECT_THROW(compute_marker_stats(spans), TooFewPatchesError);
}

TEST(LearnFilters, UnitNormAndBankSize) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + 2 * (trial % 3);
    const auto sets = random_patches(rng, k, 3, {30 + trial, 20});
    const std::vector<int> counts{1 + trial % 4, 2 + trial % 3};
    const auto bank = learn_filters(sets, counts, {.seed = static_cast<std::uint64_t>(trial)});
    ASSERT_EQ(bank.count(), counts[0] + counts[1]);
    for (int j = 0; j < bank.count(); ++j) {
      double s = 0.0;
      for (float v : bank.filter(j)) s += static_cast<double>(v) * v;
      EXPECT_LE(std::abs(std::sqrt(s) - 1.0), 1e-6);
    }
    for (int j = 0; j < bank.count(); ++j) EXPECT_EQ(bank.classes[j], j < counts[0] ? 1 : 2);
  }
}

TEST(LearnFilters, FiltersAreNormalizedClusterCenters) {
  // two tight clusters per class: filters point at their standardized means
  PatchSets sets(1, 2);
  auto add = [&](int label, float a, float b) {
    Patch p;
    p.label = label;
    p.values = {a, b};
    sets.add(p);
  };
  add(1, 1.0f, 0.0f);
  add(1, 1.0f, 0.0f);
  add(2, -1.0f, 0.0f);
  add(2, -1.0f, 0.0f);
  const auto bank = learn_filters(sets, {1, 1});
  EXPECT_NEAR(bank.filter(0)[0], 1.0f, 1e-6);
  EXPECT_NEAR(bank.filter(1)[0], -1.0f, 1e-6);
}

TEST(LearnFilters, Errors) {
  std::mt19937_64 rng(1);
  const auto sets = random_patches(rng, 3, 1, {5, 5});
  EXPECT_THROW(learn_filters(sets, {6, 1}), BadKError);
  EXPECT_THROW(learn_filters(sets, {0, 0}), BadKError);
  EXPECT_THROW(learn_filters(PatchSets(3, 1), {1}), TooFewPatchesError);
}

TEST(SplitFilters, RemainderToLowerClasses) {
  EXPECT_EQ(split_filters(60, 2), (std::vector<int>{30, 30}));
  EXPECT_EQ(split_filters(7, 3), (std::vector<int>{3, 2, 2}));
}

TEST(FilterBankIo, RoundTripAndJsonTwin) {
  std::mt19937_64 rng(2);
  const auto sets = random_patches(rng, 3, 2, {12, 9});
  const auto bank = learn_filters(sets, {2, 3});
  flim::testing::TempDir dir;
  save_filter_bank(dir / "b.flimfb", bank);
  EXPECT_EQ(load_filter_bank(dir / "b.flimfb"), bank);
  const auto bytes = serialize_filter_bank(bank);
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 7), "FLIMFB1");
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_filter_bank(truncated), FormatError);
  const auto json = filter_bank_to_json(bank);
  EXPECT_NE(json.find("\"filters\""), std::string::npos);
}
