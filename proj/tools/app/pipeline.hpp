#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "app/json_io.hpp"
#include "flim/dataset.hpp"
#include "flim/features.hpp"
#include "flim/markers.hpp"
#include "flim/mlp.hpp"
#include "flim/network.hpp"
#include "flim/svm.hpp"

namespace flim::app {

struct Split {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  const std::vector<std::string>& named(const std::string& name) const;
  friend bool operator==(const Split&, const Split&) = default;
};

/// Random disjoint split of the dataset; everything not in train or val is
/// test. `forced_train` ids are always placed in train. Lists keep dataset
/// order. Throws ValidationError when the sizes do not fit.
Split make_split(const DatasetIndex& dataset, std::size_t train, std::size_t val, std::uint64_t seed,
                 const std::vector<std::string>& forced_train = {});
Json split_to_json(const Split& split);
Split split_from_json(const Json& j);
/// Throws ValidationError if two lists share an id.
void check_disjoint(const Split& split);

/// Learns a network from the markers of the selected images. Every marker set
/// must belong to a selected image and every selected image needs markers;
/// with a split, the selection must lie in train. Output norms are fitted on
/// `norm_ids` (the selection when empty).
NetworkModel learn_selected(const DatasetIndex& dataset, const std::map<std::string, MarkerSet>& markers,
                            const std::vector<std::string>& selected, const std::optional<Split>& split,
                            const NetworkSpec& spec, const std::vector<std::string>& norm_ids, std::uint64_t seed);

/// `dir/network.flimnet` plus `layer<n>.flimfb` and its `layer<n>.json` twin.
void save_model_dir(const std::filesystem::path& dir, const NetworkModel& model);
/// Accepts the directory written by save_model_dir or a .flimnet file.
NetworkModel load_model_path(const std::filesystem::path& path);

struct ClassifierConfig {
  std::string kind = "svm";
  double C = 0.01;
  std::vector<int> hidden{4096, 4096};
  TrainConfig train{};
};
/// Throws ValidationError for unknown kinds or malformed fields.
ClassifierConfig parse_classifier_config(const Json& j);
Json classifier_config_to_json(const ClassifierConfig& config);

struct ClassifierModel {
  std::string kind;
  SvmClassifier svm;
  MlpModel mlp;
  std::vector<int> predict(const Matrix<float>& features) const;
  /// MLP: last hidden layer; SVM: per-class decision values.
  Matrix<float> embed_space(const Matrix<float>& features) const;
  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};
ClassifierModel train_classifier(const FeatureSet& train, const ClassifierConfig& config);
/// `dir/classifier.json` and `dir/model.flimsvm` or `dir/model.flimmlp`.
void save_classifier(const std::filesystem::path& dir, const ClassifierModel& model);
ClassifierModel load_classifier(const std::filesystem::path& dir);

/// {"v":1, "positive_class", "n", "metrics", "macro"}
Json evaluation_json(std::span<const int> predicted, std::span<const int> truth, int positive_class);
/// Aligned table with Precision, Recall, F-score columns.
std::string metrics_table(const std::vector<std::pair<std::string, Json>>& rows);

struct EmbeddingRequest {
  std::string space = "input";  // input | layer<n> | classifier
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 0;
};
/// Largest usable perplexity for n points (just below n / 3).
double clamp_perplexity(double requested, std::size_t n);
/// Throws ValidationError for an unknown space or a space whose model is missing.
Json compute_embedding(const DatasetIndex& dataset, const std::vector<std::string>& ids, const EmbeddingRequest& request,
                       const NetworkModel* model, const ClassifierModel* classifier);

struct RunAllOptions {
  std::filesystem::path dataset;
  std::filesystem::path markers;
  NetworkSpec spec;
  int splits = 3;
  std::uint64_t seed = 0;
  std::size_t train = 200;
  std::size_t val = 2000;
  ClassifierConfig classifier{};
  int positive_class = 1;
  std::filesystem::path out;
  std::function<void(const std::string&)> log;
};
/// Learns once per split with the same markers, trains on train, and
/// evaluates on val and test. Writes per-split artifacts and
/// `out/metrics.json` (with mean and std) and `out/metrics.txt`.
Json run_all(const RunAllOptions& options);

}  // namespace flim::app
