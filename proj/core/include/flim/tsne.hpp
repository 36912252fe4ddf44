#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flim/matrix.hpp"

namespace flim {

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
  double exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  /// Bandwidth search: entropy tolerance (nats) and bisection step limit.
  double entropy_tolerance = 1e-5;
  int max_search_steps = 50;
};

struct Embedding2D {
  Matrix<double> points;  // N x 2
  std::vector<std::string> ids;
  /// KL(P || Q) after every iteration, measured against the unexaggerated P.
  std::vector<double> kl_history;
};

/// Exact O(N^2) t-SNE. Throws TooFewPointsError for N < 4 and
/// BadPerplexityError unless 0 < perplexity < N / 3.
Embedding2D tsne(const Matrix<float>& vectors, std::vector<std::string> ids, const TsneOptions& options = {});

Matrix<double> squared_distances(const Matrix<float>& vectors);

/// Row-stochastic conditional probabilities p(j|i) with per-row bandwidths
/// found by bisection so each row's perplexity matches `perplexity`.
Matrix<double> conditional_probabilities(const Matrix<double>& sq_distances, double perplexity,
                                         double entropy_tolerance = 1e-5, int max_steps = 50);
/// exp(entropy) of a probability row, ignoring the diagonal entry `self`.
double row_perplexity(const Matrix<double>& conditional, std::size_t row);

/// (p(j|i) + p(i|j)) / 2N; sums to 1.
Matrix<double> joint_probabilities(const Matrix<double>& conditional);
/// Student-t similarities of the embedding, normalized to sum to 1.
Matrix<double> student_t_q(const Matrix<double>& embedding);

double kl_divergence(const Matrix<double>& joint_p, const Matrix<double>& embedding);
/// d KL / d y_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)
Matrix<double> kl_gradient(const Matrix<double>& joint_p, const Matrix<double>& embedding);

}  // namespace flim
