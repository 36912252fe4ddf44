#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flim {

/// Confusion counts and derived scores for one positive class. Undefined
/// ratios (zero denominators) are reported as 0 and flagged.
struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f_score_undefined = false;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Throws LengthMismatchError when the vectors differ in length.
Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, int positive_class);

/// Precision/recall/f-score derived from raw counts.
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double accuracy = 0.0;
};

/// Unweighted mean over every class present in `truth` or `predicted`.
MacroMetrics evaluate_macro(std::span<const int> predicted, std::span<const int> truth);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace flim
