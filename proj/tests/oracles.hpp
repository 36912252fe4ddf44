#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "flim/filter_bank.hpp"
#include "flim/matrix.hpp"
#include "flim/tensor.hpp"

namespace flim::oracle {

/// Minimum k-means objective over every partition of the points into
/// exactly `k` non-empty groups (restricted growth strings).
inline double exhaustive_kmeans(const Matrix<double>& pts, int k) {
  const int n = static_cast<int>(pts.rows());
  const int d = static_cast<int>(pts.cols());
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (n - i < k - used) return;
    if (i == n) {
      if (used != k) return;
      double total = 0.0;
      for (int c = 0; c < k; ++c) {
        std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
        int count = 0;
        for (int p = 0; p < n; ++p) {
          if (a[p] != c) continue;
          ++count;
          for (int j = 0; j < d; ++j) mean[j] += pts(p, j);
        }
        for (auto& m : mean) m /= count;
        for (int p = 0; p < n; ++p) {
          if (a[p] != c) continue;
          for (int j = 0; j < d; ++j) total += (pts(p, j) - mean[j]) * (pts(p, j) - mean[j]);
        }
      }
      best = std::min(best, total);
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      a[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

/// out(y, x, j) = sum over the zero-padded k x k window of
/// ((P - mean) / std) * F_j, evaluated term by term.
inline Tensor3 naive_conv(const Tensor3& rep, const FilterBank& bank) {
  const int k = bank.patch_size, r = k / 2, m = rep.channels();
  Tensor3 out(rep.height(), rep.width(), bank.count());
  for (int y = 0; y < rep.height(); ++y) {
    for (int x = 0; x < rep.width(); ++x) {
      for (int j = 0; j < bank.count(); ++j) {
        double s = 0.0;
        std::size_t idx = 0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            for (int b = 0; b < m; ++b, ++idx) {
              const int yy = y + dy, xx = x + dx;
              const double v = rep.contains(yy, xx) ? rep.at(yy, xx, b) : 0.0;
              s += (v - bank.stats.mean[idx]) / bank.stats.std[idx] * bank.filters(j, idx);
            }
          }
        }
        out.at(y, x, j) = static_cast<float>(s);
      }
    }
  }
  return out;
}

/// Valid strided max pooling, window anchored at (oy * stride, ox * stride).
inline Tensor3 naive_pool_strided(const Tensor3& rep, int w, int s) {
  const int oh = (rep.height() - w) / s + 1, ow = (rep.width() - w) / s + 1;
  Tensor3 out(oh, ow, rep.channels());
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x)
      for (int c = 0; c < rep.channels(); ++c) {
        float best = -std::numeric_limits<float>::infinity();
        for (int dy = 0; dy < w; ++dy)
          for (int dx = 0; dx < w; ++dx) best = std::max(best, rep.at(y * s + dy, x * s + dx, c));
        out.at(y, x, c) = best;
      }
  return out;
}

/// Stride-1 max pooling over a window starting (w - 1) / 2 before each pixel;
/// positions outside the map count as 0.
inline Tensor3 naive_pool_preserving(const Tensor3& rep, int w) {
  const int before = (w - 1) / 2;
  Tensor3 out(rep.height(), rep.width(), rep.channels());
  for (int y = 0; y < rep.height(); ++y)
    for (int x = 0; x < rep.width(); ++x)
      for (int c = 0; c < rep.channels(); ++c) {
        float best = -std::numeric_limits<float>::infinity();
        for (int dy = 0; dy < w; ++dy)
          for (int dx = 0; dx < w; ++dx) {
            const int yy = y - before + dy, xx = x - before + dx;
            best = std::max(best, rep.contains(yy, xx) ? rep.at(yy, xx, c) : 0.0f);
          }
        out.at(y, x, c) = best;
      }
  return out;
}

inline double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a.values()[i]) - b.values()[i]));
  }
  return worst;
}

/// Central finite difference of f at x along every coordinate.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(max_i |b_i|, floor): relative to the gradient scale.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

}  // namespace flim::oracle
