#include "flim/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "flim/errors.hpp"

namespace flim {
namespace {

double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Matrix<double> seed_plus_plus(const Matrix<double>& points, int clusters, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix<double> centroids(static_cast<std::size_t>(clusters), points.cols());
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);

  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (int c = 0; c < clusters; ++c) {
    chosen[pick] = true;
    const auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centroids.row(static_cast<std::size_t>(c)).begin());
    if (c + 1 == clusters) break;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], distance2(points.row(i), src));
      total += nearest[i];
    }
    if (total > 0.0) {
      const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        acc += nearest[i];
        pick = i;
        if (acc >= target) break;
      }
    } else {
      // every remaining point coincides with a chosen center
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
  }
  return centroids;
}

KMeansResult lloyd(const Matrix<double>& points, Matrix<double> centroids, const KMeansOptions& options) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const auto k = centroids.rows();
  KMeansResult result;
  result.assignments.assign(n, -1);
  std::vector<double> cost(n, 0.0);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = distance2(points.row(i), centroids.row(c));
        if (dist < best_d) {
          best_d = dist;
          best = static_cast<int>(c);
        }
      }
      changed |= result.assignments[i] != best;
      result.assignments[i] = best;
      cost[i] = best_d;
      objective += best_d;
    }

    // Re-seed empty clusters with the currently worst-served points.
    std::vector<std::size_t> sizes(k, 0);
    for (int a : result.assignments) ++sizes[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t worst = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (cost[i] > cost[worst] && sizes[static_cast<std::size_t>(result.assignments[i])] > 1) worst = i;
      }
      if (sizes[static_cast<std::size_t>(result.assignments[worst])] <= 1) continue;
      --sizes[static_cast<std::size_t>(result.assignments[worst])];
      result.assignments[worst] = static_cast<int>(c);
      sizes[c] = 1;
      objective -= cost[worst];
      cost[worst] = 0.0;
      changed = true;
    }

    const double previous = result.history.empty() ? std::numeric_limits<double>::infinity() : result.history.back();
    result.history.push_back(objective);
    result.objective = objective;
    result.iterations = iter + 1;

    // Update step: centroid = mean of members.
    Matrix<double> next(k, d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = next.row(static_cast<std::size_t>(result.assignments[i]));
      const auto src = points.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) {
        std::copy(centroids.row(c).begin(), centroids.row(c).end(), next.row(c).begin());
        continue;
      }
      for (auto& v : next.row(c)) v /= static_cast<double>(sizes[c]);
    }
    centroids = std::move(next);

    if (!changed || objective == 0.0) break;
    if (std::isfinite(previous) && previous - objective <= options.tol * previous) break;
  }
  result.centroids = std::move(centroids);
  result.objective = kmeans_objective(points, result.assignments, result.centroids);
  return result;
}

}  // namespace

double kmeans_objective(const Matrix<double>& points, const std::vector<int>& assignments,
                        const Matrix<double>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    total += distance2(points.row(i), centroids.row(static_cast<std::size_t>(assignments[i])));
  }
  return total;
}

KMeansResult kmeans(const Matrix<double>& points, int clusters, const KMeansOptions& options) {
  if (clusters < 1 || static_cast<std::size_t>(clusters) > points.rows()) {
    throw BadKError("K=" + std::to_string(clusters) + " must lie in [1, " + std::to_string(points.rows()) + "]");
  }
  std::mt19937_64 rng(options.seed);
  KMeansResult best;
  const int runs = std::max(1, options.restarts);
  for (int run = 0; run < runs; ++run) {
    auto result = lloyd(points, seed_plus_plus(points, clusters, rng), options);
    if (run == 0 || result.objective < best.objective) best = std::move(result);
  }
  return best;
}

}  // namespace flim
