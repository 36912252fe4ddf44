#include "flim/metrics.hpp"

#include <cmath>
#include <set>

#include "flim/errors.hpp"

namespace flim {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m{tp, fp, fn, tn};
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f_score_undefined = true;
  } else {
    m.f_score = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, int positive_class) {
  if (predicted.size() != truth.size()) {
    throw LengthMismatchError(std::to_string(predicted.size()) + " predictions for " + std::to_string(truth.size()) +
                              " labels");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == positive_class;
    const bool t = truth[i] == positive_class;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
    tn += !p && !t;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

MacroMetrics evaluate_macro(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw LengthMismatchError("predictions and labels differ in length");
  MacroMetrics macro;
  if (truth.empty()) return macro;
  std::set<int> classes(truth.begin(), truth.end());
  classes.insert(predicted.begin(), predicted.end());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  for (int c : classes) {
    const auto m = evaluate(predicted, truth, c);
    macro.precision += m.precision;
    macro.recall += m.recall;
    macro.f_score += m.f_score;
  }
  const double n = static_cast<double>(classes.size());
  macro.precision /= n;
  macro.recall /= n;
  macro.f_score /= n;
  macro.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  return macro;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

}  // namespace flim
