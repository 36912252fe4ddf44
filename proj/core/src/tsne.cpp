#include "flim/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "flim/errors.hpp"

namespace flim {

Matrix<double> squared_distances(const Matrix<float>& vectors) {
  const std::size_t n = vectors.rows();
  Matrix<double> d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = vectors.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = vectors.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = static_cast<double>(a[k]) - b[k];
        s += diff * diff;
      }
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

Matrix<double> conditional_probabilities(const Matrix<double>& dist, double perplexity, double entropy_tolerance,
                                         int max_steps) {
  const std::size_t n = dist.rows();
  Matrix<double> P(n, n, 0.0);
  const double target = std::log(perplexity);
  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) {
    // conditional distribution is invariant to a per-row shift of distances
    double dmin = std::numeric_limits<double>::infinity();
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, dist(i, j));
    }
    for (std::size_t j = 0; j < n; ++j) {
      shifted[j] = j == i ? 0.0 : dist(i, j) - dmin;
      mean += shifted[j];
    }
    mean /= static_cast<double>(n - 1);
    double beta = mean > 0.0 ? 1.0 / mean : 1.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto row = P.row(i);
    for (int step = 0; step < max_steps; ++step) {
      double sum = 0.0;
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * shifted[j]);
        sum += row[j];
        weighted += shifted[j] * row[j];
      }
      const double entropy = beta * weighted / sum + std::log(sum);
      for (auto& v : row) v /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < entropy_tolerance) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = std::isinf(lo) ? beta / 2.0 : (beta + lo) / 2.0;
      }
    }
  }
  return P;
}

double row_perplexity(const Matrix<double>& conditional, std::size_t row) {
  double h = 0.0;
  for (std::size_t j = 0; j < conditional.cols(); ++j) {
    const double p = conditional(row, j);
    if (j != row && p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

Matrix<double> joint_probabilities(const Matrix<double>& conditional) {
  const std::size_t n = conditional.rows();
  Matrix<double> P(n, n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      P(i, j) = conditional(i, j) + conditional(j, i);
      total += P(i, j);
    }
  }
  for (auto& v : P.values()) v /= total;
  return P;
}

Matrix<double> student_t_q(const Matrix<double>& Y) {
  const std::size_t n = Y.rows();
  Matrix<double> Q(n, n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < Y.cols(); ++k) {
        const double diff = Y(i, k) - Y(j, k);
        d2 += diff * diff;
      }
      const double w = 1.0 / (1.0 + d2);
      Q(i, j) = w;
      Q(j, i) = w;
      total += 2.0 * w;
    }
  }
  for (auto& v : Q.values()) v /= total;
  return Q;
}

double kl_divergence(const Matrix<double>& P, const Matrix<double>& Y) {
  const auto Q = student_t_q(Y);
  double kl = 0.0;
  for (std::size_t i = 0; i < P.rows(); ++i) {
    for (std::size_t j = 0; j < P.cols(); ++j) {
      const double p = P(i, j);
      if (i != j && p > 0.0) kl += p * std::log(p / std::max(Q(i, j), std::numeric_limits<double>::min()));
    }
  }
  return kl;
}

Matrix<double> kl_gradient(const Matrix<double>& P, const Matrix<double>& Y) {
  const std::size_t n = Y.rows();
  const std::size_t dims = Y.cols();
  // unnormalized kernel w_ij = 1 / (1 + d_ij^2) and its sum Z
  Matrix<double> W(n, n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double diff = Y(i, k) - Y(j, k);
        d2 += diff * diff;
      }
      W(i, j) = W(j, i) = 1.0 / (1.0 + d2);
      z += 2.0 * W(i, j);
    }
  }
  Matrix<double> grad(n, dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double mult = (P(i, j) - W(i, j) / z) * W(i, j);
      for (std::size_t k = 0; k < dims; ++k) grad(i, k) += 4.0 * mult * (Y(i, k) - Y(j, k));
    }
  }
  return grad;
}

Embedding2D tsne(const Matrix<float>& vectors, std::vector<std::string> ids, const TsneOptions& options) {
  const std::size_t n = vectors.rows();
  if (n < 4) throw TooFewPointsError("t-SNE needs at least 4 points, got " + std::to_string(n));
  if (!(options.perplexity > 0.0 && options.perplexity < static_cast<double>(n) / 3.0)) {
    throw BadPerplexityError("perplexity must lie in (0, N/3) = (0, " + std::to_string(static_cast<double>(n) / 3.0) + ")");
  }
  if (!ids.empty() && ids.size() != n) throw DimMismatchError("ids and vectors differ in count");

  const auto P = joint_probabilities(conditional_probabilities(squared_distances(vectors), options.perplexity,
                                                               options.entropy_tolerance, options.max_search_steps));
  Embedding2D out;
  out.ids = std::move(ids);
  Matrix<double>& Y = out.points;
  Y = Matrix<double>(n, 2);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1e-4);
  for (auto& v : Y.values()) v = gauss(rng);

  Matrix<double> exaggerated = P;
  for (auto& v : exaggerated.values()) v *= options.exaggeration;
  Matrix<double> update(n, 2, 0.0);
  Matrix<double> gains(n, 2, 1.0);

  for (int iter = 0; iter < options.iterations; ++iter) {
    const bool early = iter < options.exaggeration_iterations;
    const double momentum = iter < options.momentum_switch ? options.initial_momentum : options.final_momentum;
    const auto grad = kl_gradient(early ? exaggerated : P, Y);
    for (std::size_t k = 0; k < Y.values().size(); ++k) {
      const double g = grad.values()[k];
      double& u = update.values()[k];
      double& gain = gains.values()[k];
      gain = (std::signbit(g) != std::signbit(u)) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      u = momentum * u - options.learning_rate * gain * g;
      Y.values()[k] += u;
    }
    for (std::size_t k = 0; k < 2; ++k) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += Y(i, k);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) Y(i, k) -= mean;
    }
    out.kl_history.push_back(kl_divergence(P, Y));
  }
  return out;
}

}  // namespace flim
