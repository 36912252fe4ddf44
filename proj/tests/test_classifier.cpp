#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "flim/errors.hpp"
#include "flim/metrics.hpp"
#include "flim/mlp.hpp"
#include "flim/svm.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flim;

namespace {

Matrix<float> blobs(std::mt19937_64& rng, int per_class, int dim, double gap, std::vector<int>& labels,
                    int first_label = 1) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  Matrix<float> x(static_cast<std::size_t>(2 * per_class), static_cast<std::size_t>(dim));
  labels.clear();
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i % 2;
    for (int j = 0; j < dim; ++j) x(i, j) = g(rng) + static_cast<float>(c == 0 ? -gap : gap);
    labels.push_back(c == 0 ? first_label : first_label + (first_label == -1 ? 2 : 1));
  }
  return x;
}

// min over b of C * sum hinge for fixed w: the minimum of a convex piecewise
// linear function sits at a kink b = y_i - w x_i.
double best_primal_1d(const std::vector<double>& xs, const std::vector<int>& ys, double C, double w) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double b = ys[k] - w * xs[k];
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) loss += std::max(0.0, 1.0 - ys[i] * (w * xs[i] + b));
    best = std::min(best, 0.5 * w * w + C * loss);
  }
  return best;
}

double qp_oracle_1d(const std::vector<double>& xs, const std::vector<int>& ys, double C) {
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (best_primal_1d(xs, ys, C, a) <= best_primal_1d(xs, ys, C, b)) hi = b;
    else lo = a;
  }
  return best_primal_1d(xs, ys, C, 0.5 * (lo + hi));
}

std::vector<double> flatten(const BasicMlp<double>& m) {
  std::vector<double> p;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    p.insert(p.end(), m.weights[l].begin(), m.weights[l].end());
    p.insert(p.end(), m.biases[l].begin(), m.biases[l].end());
  }
  return p;
}

void unflatten(BasicMlp<double>& m, const std::vector<double>& p) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (auto& v : m.weights[l]) v = p[k++];
    for (auto& v : m.biases[l]) v = p[k++];
  }
}

}  // namespace

TEST(Metrics, FrozenConfusionFixtures) {
  for (const auto& c : fixtures::confusion_cases()) {
    const auto m = evaluate(c.predicted, c.truth, c.positive);
    SCOPED_TRACE(c.name);
    EXPECT_EQ(m.tp, c.tp);
    EXPECT_EQ(m.fp, c.fp);
    EXPECT_EQ(m.fn, c.fn);
    EXPECT_EQ(m.tn, c.tn);
    EXPECT_NEAR(m.precision, c.precision, 1e-12);
    EXPECT_NEAR(m.recall, c.recall, 1e-12);
    EXPECT_NEAR(m.f_score, c.f_score, 1e-12);
    EXPECT_EQ(m.precision_undefined, c.precision_undefined);
    EXPECT_EQ(m.recall_undefined, c.recall_undefined);
    EXPECT_EQ(m.f_score_undefined, c.f_score_undefined);
  }
}

TEST(Metrics, MatchesBruteForceConfusion) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(0, 100)(rng);
    const int classes = std::uniform_int_distribution<int>(2, 4)(rng);
    std::uniform_int_distribution<int> lab(1, classes);
    std::vector<int> p(n), t(n);
    for (int i = 0; i < n; ++i) {
      p[i] = lab(rng);
      t[i] = lab(rng);
    }
    const int pos = lab(rng);
    std::vector<std::vector<std::size_t>> confusion(classes + 1, std::vector<std::size_t>(classes + 1, 0));
    for (int i = 0; i < n; ++i) ++confusion[t[i]][p[i]];
    std::size_t tp = confusion[pos][pos], fp = 0, fn = 0, tn = 0;
    for (int a = 1; a <= classes; ++a)
      for (int b = 1; b <= classes; ++b) {
        if (a == pos && b == pos) continue;
        if (b == pos) fp += confusion[a][b];
        else if (a == pos) fn += confusion[a][b];
        else tn += confusion[a][b];
      }
    const auto m = evaluate(p, t, pos);
    ASSERT_EQ(m.tp, tp);
    ASSERT_EQ(m.fp, fp);
    ASSERT_EQ(m.fn, fn);
    ASSERT_EQ(m.tn, tn);
  }
}

TEST(Metrics, PermutationInvariant) {
  std::mt19937_64 rng(3);
  std::vector<int> p(60), t(60);
  for (int i = 0; i < 60; ++i) {
    p[i] = 1 + static_cast<int>(rng() % 2);
    t[i] = 1 + static_cast<int>(rng() % 2);
  }
  const auto ref = evaluate(p, t, 1);
  std::vector<std::size_t> idx(60);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int r = 0; r < 10; ++r) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> pp, tt;
    for (auto i : idx) {
      pp.push_back(p[i]);
      tt.push_back(t[i]);
    }
    EXPECT_EQ(evaluate(pp, tt, 1), ref);
  }
}

TEST(Metrics, LengthMismatchAndMacro) {
  std::vector<int> a{1, 2}, b{1};
  EXPECT_THROW(evaluate(a, b, 1), LengthMismatchError);
  std::vector<int> p{1, 1, 2, 2}, t{1, 2, 2, 2};
  const auto macro = evaluate_macro(p, t);
  EXPECT_NEAR(macro.accuracy, 0.75, 1e-12);
  EXPECT_NEAR(macro.precision, (0.5 + 1.0) / 2, 1e-12);
  EXPECT_NEAR(macro.recall, (1.0 + 2.0 / 3.0) / 2, 1e-12);
  const std::vector<double> v{0.8, 0.9, 1.0};
  const auto ms = mean_std(v);
  EXPECT_NEAR(ms.mean, 0.9, 1e-12);
  EXPECT_NEAR(ms.std, std::sqrt(0.02 / 3.0), 1e-12);
}

TEST(Svm, SeparablePair) {
  Matrix<float> x(2, 1);
  x(0, 0) = -1.0f;
  x(1, 0) = 1.0f;
  const std::vector<int> y{-1, 1};
  const auto m = train_svm(x, y, 100.0);
  EXPECT_LT(m.decision(x.row(0)), 0.0);
  EXPECT_GT(m.decision(x.row(1)), 0.0);
  EXPECT_NEAR(m.weights[0], 1.0, 1e-3);
  EXPECT_NEAR(m.bias, 0.0, 1e-3);
}

TEST(Svm, MatchesTinyQpOracle) {
  const std::vector<std::vector<double>> sets{{1.0, 1.0}, {1.0, 1.0, -1.0}, {1.0, 1.0, 2.0}};
  const std::vector<std::vector<int>> labels{{1, -1}, {1, -1, -1}, {1, -1, 1}};
  for (double C : {0.01, 0.5, 1.0, 10.0}) {
    for (std::size_t s = 0; s < sets.size(); ++s) {
      Matrix<float> x(sets[s].size(), 1);
      for (std::size_t i = 0; i < sets[s].size(); ++i) x(i, 0) = static_cast<float>(sets[s][i]);
      SvmReport report;
      const auto m = train_svm(x, labels[s], C, {.tolerance = 1e-6}, &report);
      const double oracle = qp_oracle_1d(sets[s], labels[s], C);
      EXPECT_NEAR(svm_primal_objective(m, x, labels[s]), oracle, 1e-3) << "C=" << C << " set " << s;
    }
  }
}

TEST(Svm, DualObjectiveNonIncreasing) {
  std::mt19937_64 rng(6);
  std::vector<int> y;
  const auto x = blobs(rng, 60, 5, 0.3, y, -1);
  SvmReport report;
  train_svm(x, y, 1.0, {}, &report);
  ASSERT_GE(report.dual_history.size(), 2u);
  for (std::size_t i = 1; i < report.dual_history.size(); ++i) {
    EXPECT_LE(report.dual_history[i], report.dual_history[i - 1] + 1e-9);
  }
  EXPECT_LE((report.primal_objective - report.dual_objective) / std::abs(report.primal_objective), 1e-4 + 1e-12);
}

TEST(Svm, ClassifierAndErrors) {
  std::mt19937_64 rng(8);
  std::vector<int> y;
  const auto x = blobs(rng, 40, 4, 2.0, y, 1);
  const auto clf = train_svm_classifier(x, y, 0.01);
  const auto pred = clf.predict(x);
  EXPECT_EQ(evaluate(pred, y, 1).f_score, 1.0);
  const std::vector<int> one(x.rows(), 1);
  EXPECT_THROW(train_svm(x, one, 1.0), SingleClassError);
  const std::vector<int> short_labels{1, -1};
  EXPECT_THROW(train_svm(x, short_labels, 1.0), DimMismatchError);
  flim::testing::TempDir dir;
  save_svm(dir / "m.flimsvm", clf);
  EXPECT_EQ(load_svm(dir / "m.flimsvm"), clf);
}

TEST(Svm, ThreeClassOneVsRest) {
  Matrix<float> x(9, 2);
  std::vector<int> y;
  const float centers[3][2] = {{0, 5}, {5, 0}, {-5, -5}};
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g(0.0f, 0.3f);
  for (int i = 0; i < 9; ++i) {
    x(i, 0) = centers[i % 3][0] + g(rng);
    x(i, 1) = centers[i % 3][1] + g(rng);
    y.push_back(i % 3 + 1);
  }
  const auto clf = train_svm_classifier(x, y, 10.0);
  EXPECT_EQ(clf.models.size(), 3u);
  EXPECT_EQ(clf.predict(x), y);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::vector<int> y;
  const auto x = blobs(rng, 6, 3, 0.5, y, 1);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (const auto& sizes : {std::vector<int>{1, 1, 2}, std::vector<int>{3, 4, 2}, std::vector<int>{3, 5, 4, 2}}) {
    auto model = init_mlp<double>(sizes, 3);
    for (auto& b : model.biases)
      for (auto& v : b) v = 0.1;
    Matrix<float> xs(x.rows(), static_cast<std::size_t>(sizes[0]));
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (int j = 0; j < sizes[0]; ++j) xs(i, j) = x(i, j);
    std::vector<std::vector<double>> gw, gb;
    mlp_loss(model, xs, y, rows, 1e-3, &gw, &gb);
    std::vector<double> analytic;
    for (std::size_t l = 0; l < gw.size(); ++l) {
      analytic.insert(analytic.end(), gw[l].begin(), gw[l].end());
      analytic.insert(analytic.end(), gb[l].begin(), gb[l].end());
    }
    auto probe = model;
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& p) {
          unflatten(probe, p);
          return mlp_loss(probe, xs, y, rows, 1e-3);
        },
        flatten(model), 1e-6);
    EXPECT_LE(oracle::relative_error(analytic, numeric), 1e-4) << "sizes " << sizes.size();
  }
}

TEST(Mlp, SeparableBlobsReachPerfectTraining) {
  std::mt19937_64 rng(2);
  std::vector<int> y;
  const auto x = blobs(rng, 50, 2, 2.0, y, 1);
  const auto model = train_mlp(x, y, {8}, {.epochs = 40, .batch_size = 16, .learning_rate = 0.05, .seed = 1});
  const auto pred = model.predict(x);
  EXPECT_EQ(std::count_if(pred.begin(), pred.end(), [&, i = 0](int p) mutable { return p == y[i++]; }),
            static_cast<long>(y.size()));
}

TEST(Mlp, ZeroLearningRateLeavesParametersUnchanged) {
  std::mt19937_64 rng(4);
  std::vector<int> y;
  const auto x = blobs(rng, 20, 3, 1.0, y, 1);
  const auto model = train_mlp(x, y, {5}, {.epochs = 3, .batch_size = 8, .learning_rate = 0.0, .seed = 7});
  EXPECT_EQ(model, init_mlp<float>({3, 5, 2}, 7));
}

TEST(Mlp, DefaultConfigAndSchedule) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 40);
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-4);
  EXPECT_DOUBLE_EQ(c.weight_decay, 1e-3);
  EXPECT_DOUBLE_EQ(c.lr_decay_factor, 0.1);
  EXPECT_EQ(c.lr_decay_start, 30);
  EXPECT_EQ(c.lr_decay_period, 5);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(1), 1e-4);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(35), 1e-4);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(36), 1e-5);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(40), 1e-5);
  EXPECT_NEAR(c.learning_rate_at(41), 1e-6, 1e-18);
  EXPECT_THROW((TrainConfig{.lr_decay_factor = 1.5}.validate()), ConfigError);
  EXPECT_THROW((TrainConfig{.batch_size = 0}.validate()), ConfigError);
}

TEST(Mlp, ErrorsAndSerialization) {
  std::mt19937_64 rng(5);
  std::vector<int> y;
  const auto x = blobs(rng, 10, 2, 1.0, y, 1);
  const std::vector<int> single(x.rows(), 1);
  EXPECT_THROW(train_mlp(x, single, {3}), SingleClassError);
  EXPECT_THROW(train_mlp(x, y, {3}, {.learning_rate = 1e30, .seed = 1}), DivergenceError);
  const auto model = train_mlp(x, y, {3}, {.epochs = 2, .batch_size = 4, .learning_rate = 0.01});
  flim::testing::TempDir dir;
  save_mlp(dir / "m.flimmlp", model);
  EXPECT_EQ(load_mlp(dir / "m.flimmlp"), model);
  EXPECT_EQ(model.parameter_count(), 2u * 3 + 3 + 3u * 2 + 2);
}
