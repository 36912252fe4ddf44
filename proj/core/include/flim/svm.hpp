#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flim/matrix.hpp"

namespace flim {

/// Linear decision function w.x + b with the C it was trained under.
struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double C = 0.01;

  double decision(std::span<const float> x) const;

  friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

struct SvmOptions {
  /// Stop once (primal - dual) / primal <= tolerance.
  double tolerance = 1e-4;
  /// Hard cap on pair updates; 0 picks 1000 * n + 10000.
  std::size_t max_iterations = 0;
};

struct SvmReport {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::size_t iterations = 0;
  /// Dual objective 1/2 a'Qa - sum(a), recorded after every n pair updates.
  std::vector<double> dual_history;
};

/// Minimizes 1/2 |w|^2 + C sum max(0, 1 - y (w.x + b)) with an unregularized
/// bias by two-coordinate dual descent (SMO, second-order pair selection).
/// Labels must be -1 or +1. Throws SingleClassError if only one label is
/// present and DimMismatchError when labels and rows differ.
LinearSvmModel train_svm(const Matrix<float>& features, std::span<const int> labels, double C,
                         const SvmOptions& options = {}, SvmReport* report = nullptr);

double svm_primal_objective(const LinearSvmModel& model, const Matrix<float>& features, std::span<const int> labels);

/// Multi-class wrapper: a single binary model for two classes (first class
/// positive), one-vs-rest otherwise.
struct SvmClassifier {
  std::vector<int> class_labels;
  std::vector<LinearSvmModel> models;

  int predict(std::span<const float> x) const;
  std::vector<int> predict(const Matrix<float>& features) const;

  friend bool operator==(const SvmClassifier&, const SvmClassifier&) = default;
};

SvmClassifier train_svm_classifier(const Matrix<float>& features, std::span<const int> labels, double C,
                                   const SvmOptions& options = {});

/// Magic "FLIMSVM1": u32 version, u32 class count, i32 labels, u32 model
/// count, per model f64 C, f64 bias, u32 dim, f64 weights[dim].
std::vector<std::uint8_t> serialize_svm(const SvmClassifier& clf);
SvmClassifier deserialize_svm(std::span<const std::uint8_t> bytes);
void save_svm(const std::filesystem::path& path, const SvmClassifier& clf);
SvmClassifier load_svm(const std::filesystem::path& path);

}  // namespace flim
