#include "flim/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "binary_io.hpp"
#include "flim/errors.hpp"

namespace flim {
namespace {

constexpr double kTau = 1e-12;
constexpr std::uint32_t kSvmVersion = 1;

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

// Sum of hinge losses for decision values f_i + b.
double hinge_sum(std::span<const double> f, std::span<const int> y, double b) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::max(0.0, 1.0 - y[i] * (f[i] + b));
  return s;
}

// Exact minimizer of the (convex, piecewise-linear) hinge sum over b.
double best_bias(std::span<const double> f, std::span<const int> y, double hint) {
  const std::size_t n = f.size();
  std::vector<std::pair<double, int>> breaks(n);
  for (std::size_t i = 0; i < n; ++i) breaks[i] = {y[i] > 0 ? 1.0 - f[i] : -1.0 - f[i], y[i]};
  std::sort(breaks.begin(), breaks.end());
  // plus-label terms are active for b < t, minus-label terms for b > t
  double plus_sum = 0.0, plus_count = 0.0;
  for (const auto& [t, label] : breaks) {
    if (label > 0) {
      plus_sum += t;
      plus_count += 1.0;
    }
  }
  double minus_sum = 0.0, minus_count = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  double best_b = hint;
  std::size_t i = 0;
  while (i < n) {
    const double b = breaks[i].first;
    // terms with t == b contribute zero at b
    std::size_t j = i;
    double eq_plus_sum = 0.0, eq_plus = 0.0, eq_minus_sum = 0.0, eq_minus = 0.0;
    while (j < n && breaks[j].first == b) {
      if (breaks[j].second > 0) {
        eq_plus_sum += breaks[j].first;
        eq_plus += 1.0;
      } else {
        eq_minus_sum += breaks[j].first;
        eq_minus += 1.0;
      }
      ++j;
    }
    plus_sum -= eq_plus_sum;
    plus_count -= eq_plus;
    const double value = (plus_sum - b * plus_count) + (b * minus_count - minus_sum);
    if (value < best_value) {
      best_value = value;
      best_b = b;
    }
    minus_sum += eq_minus_sum;
    minus_count += eq_minus;
    i = j;
  }
  const double at_hint = hinge_sum(f, y, hint);
  if (at_hint <= best_value * (1.0 + 1e-12) + 1e-15) return hint;
  return best_b;
}

}  // namespace

double LinearSvmModel::decision(std::span<const float> x) const {
  if (x.size() != weights.size()) throw DimMismatchError("feature dimension does not match the SVM");
  double s = bias;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

double svm_primal_objective(const LinearSvmModel& model, const Matrix<float>& features, std::span<const int> labels) {
  double w2 = 0.0;
  for (double w : model.weights) w2 += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    loss += std::max(0.0, 1.0 - labels[i] * model.decision(features.row(i)));
  }
  return 0.5 * w2 + model.C * loss;
}

LinearSvmModel train_svm(const Matrix<float>& features, std::span<const int> labels, double C,
                         const SvmOptions& options, SvmReport* report) {
  const std::size_t n = features.rows();
  if (labels.size() != n) throw DimMismatchError(std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
  if (!(C > 0.0)) throw ValidationError("C must be positive");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y != 1 && y != -1) throw ValidationError("SVM labels must be -1 or +1");
    has_pos |= y == 1;
    has_neg |= y == -1;
  }
  if (!has_pos || !has_neg) throw SingleClassError("SVM training needs both -1 and +1 examples");

  // Gram matrix
  Matrix<double> K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = dot(features.row(i), features.row(j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  std::vector<double> y(labels.begin(), labels.end());
  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K(i, j); };
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  auto dual_value = [&] {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += alpha[t] * (G[t] - 1.0);
    return 0.5 * s;
  };
  auto kkt_bias = [&] {
    // -rho from free vectors, else the midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double yG = y[t] * G[t];
      if (upper(t)) {
        if (y[t] < 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
      } else if (lower(t)) {
        if (y[t] > 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
      } else {
        ++free;
        sum += yG;
      }
    }
    const double rho = free > 0 ? sum / static_cast<double>(free) : (ub + lb) / 2.0;
    return -rho;
  };
  auto decisions = [&] {
    std::vector<double> f(n);
    for (std::size_t t = 0; t < n; ++t) f[t] = y[t] * (G[t] + 1.0);
    return f;
  };
  auto primal_value = [&](double& b_out) {
    const auto f = decisions();
    b_out = best_bias(f, labels, kkt_bias());
    double w2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) w2 += alpha[t] * (G[t] + 1.0);
    return 0.5 * w2 + C * hinge_sum(f, labels, b_out);
  };

  const std::size_t max_iter = options.max_iterations > 0 ? options.max_iterations : 1000 * n + 10000;
  const std::size_t check_every = std::max<std::size_t>(n, 1);
  std::vector<double> history{dual_value()};
  std::size_t iter = 0;
  double bias = 0.0;
  double primal = 0.0;
  for (;;) {
    // second-order working set selection
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!upper(t) && -G[t] >= gmax) { gmax = -G[t]; i = t; }
      } else {
        if (!lower(t) && G[t] >= gmax) { gmax = G[t]; i = t; }
      }
    }
    double best_obj = std::numeric_limits<double>::infinity();
    if (i < n) {
      for (std::size_t t = 0; t < n; ++t) {
        if (y[t] > 0) {
          if (lower(t)) continue;
          const double diff = gmax + G[t];
          gmax2 = std::max(gmax2, G[t]);
          if (diff > 0) {
            double quad = K(i, i) + K(t, t) - 2.0 * y[i] * Q(i, t);
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j = t; }
          }
        } else {
          if (upper(t)) continue;
          const double diff = gmax - G[t];
          gmax2 = std::max(gmax2, -G[t]);
          if (diff > 0) {
            double quad = K(i, i) + K(t, t) + 2.0 * y[i] * Q(i, t);
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= best_obj) { best_obj = obj; j = t; }
          }
        }
      }
    }
    const bool converged = i == n || j == n || gmax + gmax2 < 1e-10;
    const bool check = converged || iter >= max_iter || (iter > 0 && iter % check_every == 0);
    if (check) {
      if (iter > 0 && iter % check_every == 0) history.push_back(dual_value());
      primal = primal_value(bias);
      const double dual = -dual_value();
      const double gap = (primal - dual) / std::max(std::abs(primal), 1e-300);
      if (converged || iter >= max_iter || gap <= options.tolerance) break;
    }

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    ++iter;
  }
  history.push_back(dual_value());

  LinearSvmModel model;
  model.C = C;
  model.bias = bias;
  model.weights.assign(features.cols(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] == 0.0) continue;
    const double coef = alpha[t] * y[t];
    const auto x = features.row(t);
    for (std::size_t c = 0; c < x.size(); ++c) model.weights[c] += coef * x[c];
  }
  if (report) {
    report->iterations = iter;
    report->dual_history = std::move(history);
    report->dual_objective = -dual_value();
    report->primal_objective = primal;
  }
  return model;
}

int SvmClassifier::predict(std::span<const float> x) const {
  if (models.size() == 1) return models[0].decision(x) >= 0.0 ? class_labels[0] : class_labels[1];
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < models.size(); ++c) {
    const double v = models[c].decision(x);
    if (v > best_v) {
      best_v = v;
      best = c;
    }
  }
  return class_labels[best];
}

std::vector<int> SvmClassifier::predict(const Matrix<float>& features) const {
  std::vector<int> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out[i] = predict(features.row(i));
  return out;
}

SvmClassifier train_svm_classifier(const Matrix<float>& features, std::span<const int> labels, double C,
                                   const SvmOptions& options) {
  std::set<int> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw SingleClassError("classifier training needs at least two classes");
  SvmClassifier clf;
  clf.class_labels.assign(classes.begin(), classes.end());
  const std::size_t models = clf.class_labels.size() == 2 ? 1 : clf.class_labels.size();
  for (std::size_t c = 0; c < models; ++c) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == clf.class_labels[c] ? 1 : -1;
    clf.models.push_back(train_svm(features, y, C, options));
  }
  return clf;
}

std::vector<std::uint8_t> serialize_svm(const SvmClassifier& clf) {
  detail::BinaryWriter w;
  w.magic("FLIMSVM1");
  w.u32(kSvmVersion);
  w.u32(static_cast<std::uint32_t>(clf.class_labels.size()));
  for (int c : clf.class_labels) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(clf.models.size()));
  for (const auto& m : clf.models) {
    w.f64(m.C);
    w.f64(m.bias);
    w.u32(static_cast<std::uint32_t>(m.weights.size()));
    w.f64s(m.weights);
  }
  return std::move(w.bytes());
}

SvmClassifier deserialize_svm(std::span<const std::uint8_t> bytes) {
  detail::BinaryReader r(bytes, "SVM model");
  r.expect_magic("FLIMSVM1");
  if (const auto v = r.u32(); v != kSvmVersion) throw FormatError("unsupported SVM version " + std::to_string(v));
  SvmClassifier clf;
  const auto classes = r.u32();
  for (std::uint32_t i = 0; i < classes; ++i) clf.class_labels.push_back(static_cast<int>(r.u32()));
  const auto models = r.u32();
  for (std::uint32_t i = 0; i < models; ++i) {
    LinearSvmModel m;
    m.C = r.f64();
    m.bias = r.f64();
    m.weights = r.f64s(r.u32());
    clf.models.push_back(std::move(m));
  }
  r.expect_end();
  return clf;
}

void save_svm(const std::filesystem::path& path, const SvmClassifier& clf) { detail::write_file(path, serialize_svm(clf)); }

SvmClassifier load_svm(const std::filesystem::path& path) { return deserialize_svm(detail::read_file(path)); }

}  // namespace flim
