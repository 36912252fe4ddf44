#pragma once

#include <string>
#include <vector>

namespace flim::fixtures {

struct ConfusionCase {
  std::string name;
  std::vector<int> predicted;
  std::vector<int> truth;
  int positive = 1;
  std::size_t tp, fp, fn, tn;
  double precision, recall, f_score;
  bool precision_undefined, recall_undefined, f_score_undefined;
};

// Expected values worked out by hand.
inline std::vector<ConfusionCase> confusion_cases() {
  return {
      {"perfect", {1, 1, 2, 2}, {1, 1, 2, 2}, 1, 2, 0, 0, 2, 1.0, 1.0, 1.0, false, false, false},
      {"tp3_fp1_fn2", {1, 1, 1, 2, 2, 1}, {1, 1, 1, 1, 1, 2}, 1, 3, 1, 2, 0, 0.75, 0.6, 2.0 / 3.0, false, false, false},
      {"all_negative_predictions", {2, 2, 2}, {1, 2, 1}, 1, 0, 0, 2, 1, 0.0, 0.0, 0.0, true, false, true},
      {"no_positives_anywhere", {2, 2}, {2, 2}, 1, 0, 0, 0, 2, 0.0, 0.0, 0.0, true, true, true},
      {"false_alarm_only", {1, 2, 2}, {2, 2, 2}, 1, 0, 1, 0, 2, 0.0, 0.0, 0.0, false, true, true},
      {"all_wrong", {2, 1}, {1, 2}, 1, 0, 1, 1, 0, 0.0, 0.0, 0.0, false, false, true},
      {"all_positive_predictions", {1, 1, 1, 1, 1}, {1, 1, 2, 2, 2}, 1, 2, 3, 0, 0, 0.4, 1.0, 4.0 / 7.0, false, false,
       false},
      {"positive_class_2_of_3", {2, 2, 1, 3}, {1, 2, 2, 3}, 2, 1, 1, 1, 1, 0.5, 0.5, 0.5, false, false, false},
      {"empty", {}, {}, 1, 0, 0, 0, 0, 0.0, 0.0, 0.0, true, true, true},
      {"low_recall", {1, 2, 2, 2, 2, 2, 2, 2}, {1, 1, 1, 1, 2, 2, 2, 2}, 1, 1, 0, 3, 4, 1.0, 0.25, 0.4, false, false,
       false},
  };
}

}  // namespace flim::fixtures
