#pragma once

#include <cstdint>
#include <vector>

#include "flim/matrix.hpp"

namespace flim {

struct KMeansOptions {
  std::uint64_t seed = 0;
  int max_iter = 300;
  /// Stop once the relative objective decrease of an iteration is <= tol.
  double tol = 1e-6;
  /// Independent k-means++ initializations; the lowest objective wins.
  int restarts = 10;
};

struct KMeansResult {
  std::vector<int> assignments;
  Matrix<double> centroids;
  /// Sum of squared distances of points to their assigned centroid.
  double objective = 0.0;
  /// Objective after every assignment step of the winning run.
  std::vector<double> history;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a given seed.
/// Ties in assignment go to the lower centroid index; an emptied cluster is
/// re-seeded with the point farthest from its centroid.
/// Throws BadKError unless 1 <= K <= points.rows().
KMeansResult kmeans(const Matrix<double>& points, int clusters, const KMeansOptions& options = {});

/// Sum of squared distances for a given assignment and centroid set.
double kmeans_objective(const Matrix<double>& points, const std::vector<int>& assignments,
                        const Matrix<double>& centroids);

}  // namespace flim
