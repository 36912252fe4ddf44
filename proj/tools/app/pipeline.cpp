#include "app/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "flim/errors.hpp"
#include "flim/tsne.hpp"

namespace flim::app {
namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> ids_of(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of ids");
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

const std::vector<std::string>& Split::named(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ValidationError("unknown split '" + name + "' (expected train, val, or test)");
}

Split make_split(const DatasetIndex& dataset, std::size_t train, std::size_t val, std::uint64_t seed,
                 const std::vector<std::string>& forced_train) {
  const std::size_t n = dataset.entries.size();
  if (train + val > n) {
    throw ValidationError(fmt::format("train {} + val {} exceeds the dataset size {}", train, val, n));
  }
  std::set<std::string> forced(forced_train.begin(), forced_train.end());
  if (forced.size() > train) throw ValidationError(fmt::format("{} images must be in train but train holds {}", forced.size(), train));
  for (const auto& id : forced) {
    if (dataset.find(id) == nullptr) throw ValidationError("image '" + id + "' is not in the dataset");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (!forced.contains(dataset.entries[i].id)) order.push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<int> role(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (forced.contains(dataset.entries[i].id)) role[i] = 0;
  }
  const std::size_t free_train = train - forced.size();
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k < free_train) role[order[k]] = 0;
    else if (k < free_train + val) role[order[k]] = 1;
  }
  Split split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    auto& list = role[i] == 0 ? split.train : role[i] == 1 ? split.val : split.test;
    list.push_back(dataset.entries[i].id);
  }
  return split;
}

Json split_to_json(const Split& split) {
  return Json{{"v", 1}, {"seed", split.seed}, {"train", split.train}, {"val", split.val}, {"test", split.test}};
}

Split split_from_json(const Json& j) {
  Split s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.train = ids_of(require(j, "train"));
    s.val = ids_of(require(j, "val"));
    s.test = ids_of(require(j, "test"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("split: ") + e.what());
  }
  check_disjoint(s);
  return s;
}

void check_disjoint(const Split& split) {
  std::set<std::string> seen;
  for (const auto* list : {&split.train, &split.val, &split.test}) {
    for (const auto& id : *list) {
      if (!seen.insert(id).second) throw ValidationError("image '" + id + "' appears in more than one split");
    }
  }
}

NetworkModel learn_selected(const DatasetIndex& dataset, const std::map<std::string, MarkerSet>& markers,
                            const std::vector<std::string>& selected, const std::optional<Split>& split,
                            const NetworkSpec& spec, const std::vector<std::string>& norm_ids, std::uint64_t seed) {
  if (selected.empty()) throw InsufficientMarkersError("no images selected for learning");
  const std::set<std::string> chosen(selected.begin(), selected.end());
  for (const auto& [id, m] : markers) {
    if (!chosen.contains(id)) throw ValidationError("markers reference image '" + id + "' outside the selected set");
  }
  if (split) {
    const std::set<std::string> train(split->train.begin(), split->train.end());
    for (const auto& id : selected) {
      if (!train.contains(id)) throw ValidationError("selected image '" + id + "' is not in the training split");
    }
  }
  const auto images = load_images(dataset, selected);
  std::vector<MarkedImage> marked;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto it = markers.find(selected[i]);
    if (it == markers.end()) throw ValidationError("selected image '" + selected[i] + "' has no markers");
    marked.push_back({images[i], it->second});
  }
  LearnOptions options;
  options.seed = seed;
  options.classes = dataset.classes;
  const auto norm_images = norm_ids.empty() ? std::vector<Image>{} : load_images(dataset, norm_ids);
  return learn_network(marked, spec, norm_images, options);
}

void save_model_dir(const std::filesystem::path& dir, const NetworkModel& model) {
  std::filesystem::create_directories(dir);
  save_network(dir / "network.flimnet", model);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto stem = dir / fmt::format("layer{}", l + 1);
    save_filter_bank(stem.string() + ".flimfb", model.layers[l].bank);
    write_text_file(stem.string() + ".json", filter_bank_to_json(model.layers[l].bank));
  }
}

NetworkModel load_model_path(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_network(path / "network.flimnet");
  return load_network(path);
}

ClassifierConfig parse_classifier_config(const Json& j) {
  ClassifierConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("classifier config must be an object");
  try {
    c.kind = j.value("kind", c.kind);
    c.C = j.value("C", c.C);
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<int>>();
    auto& t = c.train;
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    t.lr_decay_factor = j.value("lr_decay_factor", t.lr_decay_factor);
    t.lr_decay_start = j.value("lr_decay_start", t.lr_decay_start);
    t.lr_decay_period = j.value("lr_decay_period", t.lr_decay_period);
    t.momentum = j.value("momentum", t.momentum);
    t.seed = j.value("seed", t.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("classifier config: ") + e.what());
  }
  if (c.kind != "svm" && c.kind != "mlp") throw ValidationError("unknown classifier kind '" + c.kind + "'");
  if (!(c.C > 0.0)) throw ValidationError("C must be positive");
  for (int h : c.hidden) {
    if (h < 1) throw ValidationError("hidden layer sizes must be positive");
  }
  try {
    c.train.validate();
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  return c;
}

Json classifier_config_to_json(const ClassifierConfig& c) {
  const auto& t = c.train;
  return Json{{"kind", c.kind},
              {"C", c.C},
              {"hidden", c.hidden},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"weight_decay", t.weight_decay},
              {"lr_decay_factor", t.lr_decay_factor},
              {"lr_decay_start", t.lr_decay_start},
              {"lr_decay_period", t.lr_decay_period},
              {"momentum", t.momentum},
              {"seed", t.seed}};
}

std::vector<int> ClassifierModel::predict(const Matrix<float>& features) const {
  return kind == "svm" ? svm.predict(features) : mlp.predict(features);
}

Matrix<float> ClassifierModel::embed_space(const Matrix<float>& features) const {
  Matrix<float> out;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    std::vector<float> row;
    if (kind == "svm") {
      for (const auto& m : svm.models) row.push_back(static_cast<float>(m.decision(features.row(i))));
    } else {
      row = mlp.last_hidden(features.row(i));
    }
    if (i == 0) out = Matrix<float>(0, row.size());
    out.push_row(row);
  }
  return out;
}

ClassifierModel train_classifier(const FeatureSet& train, const ClassifierConfig& config) {
  ClassifierModel m;
  m.kind = config.kind;
  if (config.kind == "svm") {
    m.svm = train_svm_classifier(train.features, train.labels, config.C);
  } else {
    m.mlp = train_mlp(train.features, train.labels, config.hidden, config.train);
  }
  return m;
}

void save_classifier(const std::filesystem::path& dir, const ClassifierModel& model) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "classifier.json", Json{{"v", 1}, {"kind", model.kind}}.dump(2) + "\n");
  if (model.kind == "svm") {
    save_svm(dir / "model.flimsvm", model.svm);
  } else {
    save_mlp(dir / "model.flimmlp", model.mlp);
  }
}

ClassifierModel load_classifier(const std::filesystem::path& dir) {
  const auto meta = parse_json(read_text_file(dir / "classifier.json"), "classifier.json");
  ClassifierModel m;
  m.kind = meta.value("kind", std::string{});
  if (m.kind == "svm") {
    m.svm = load_svm(dir / "model.flimsvm");
  } else if (m.kind == "mlp") {
    m.mlp = load_mlp(dir / "model.flimmlp");
  } else {
    throw FormatError("classifier.json has unknown kind '" + m.kind + "'");
  }
  return m;
}

Json evaluation_json(std::span<const int> predicted, std::span<const int> truth, int positive_class) {
  return Json{{"v", 1},
              {"positive_class", positive_class},
              {"n", truth.size()},
              {"metrics", metrics_to_json(evaluate(predicted, truth, positive_class))},
              {"macro", macro_to_json(evaluate_macro(predicted, truth))}};
}

std::string metrics_table(const std::vector<std::pair<std::string, Json>>& rows) {
  std::size_t width = 6;
  for (const auto& [name, _] : rows) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {:>17}  {:>17}  {:>17}\n", "Method", width, "Precision", "Recall", "F-score");
  for (const auto& [name, j] : rows) {
    auto cell = [&](const char* key) {
      const auto& v = j.at(key);
      if (v.is_object()) return fmt::format("{:.3f} ± {:.3f}", v.at("mean").get<double>(), v.at("std").get<double>());
      return fmt::format("{:.3f}", v.get<double>());
    };
    out += fmt::format("{:<{}}  {:>17}  {:>17}  {:>17}\n", name, width, cell("precision"), cell("recall"), cell("f_score"));
  }
  return out;
}

double clamp_perplexity(double requested, std::size_t n) {
  const double limit = static_cast<double>(n) / 3.0;
  return std::min(requested, limit * 0.99);
}

Json compute_embedding(const DatasetIndex& dataset, const std::vector<std::string>& ids, const EmbeddingRequest& request,
                       const NetworkModel* model, const ClassifierModel* classifier) {
  FeatureSet vectors;
  const auto& space = request.space;
  if (space == "input") {
    vectors = raw_feature_set(dataset, ids);
  } else if (space.rfind("layer", 0) == 0) {
    if (model == nullptr) throw ValidationError("no learned network for space '" + space + "'");
    int layer = 0;
    try {
      layer = std::stoi(space.substr(5));
    } catch (const std::exception&) {
      throw ValidationError("bad space '" + space + "'");
    }
    if (layer < 1 || layer > static_cast<int>(model->layers.size())) throw ValidationError("bad space '" + space + "'");
    NetworkModel prefix = *model;
    prefix.layers.resize(static_cast<std::size_t>(layer));
    vectors = extract_feature_set(dataset, ids, prefix);
  } else if (space == "classifier") {
    if (model == nullptr || classifier == nullptr) throw ValidationError("no trained classifier for space 'classifier'");
    vectors = extract_feature_set(dataset, ids, *model);
    vectors.features = classifier->embed_space(vectors.features);
  } else {
    throw ValidationError("unknown space '" + space + "' (expected input, layer<n>, or classifier)");
  }
  TsneOptions opts;
  opts.perplexity = clamp_perplexity(request.perplexity, ids.size());
  opts.iterations = request.iterations;
  opts.seed = request.seed;
  const auto emb = tsne(vectors.features, vectors.ids, opts);
  Json points = Json::array();
  for (std::size_t i = 0; i < emb.ids.size(); ++i) {
    points.push_back(
        Json{{"id", emb.ids[i]}, {"x", emb.points(i, 0)}, {"y", emb.points(i, 1)}, {"label", vectors.labels[i]}});
  }
  return Json{{"v", 1},
              {"space", space},
              {"perplexity", opts.perplexity},
              {"iterations", opts.iterations},
              {"kl", emb.kl_history.empty() ? 0.0 : emb.kl_history.back()},
              {"points", std::move(points)}};
}

Json run_all(const RunAllOptions& o) {
  auto log = [&](const std::string& msg) {
    if (o.log) o.log(msg);
  };
  if (o.splits < 1) throw ValidationError("--splits must be at least 1");
  const auto dataset = load_dataset(o.dataset);
  std::map<std::string, MarkerSet> markers;
  std::vector<std::string> selected;
  for (auto& m : load_marker_dir(o.markers)) {
    if (dataset.find(m.image_id) == nullptr) throw ValidationError("marker file for unknown image '" + m.image_id + "'");
    selected.push_back(m.image_id);
    markers.emplace(m.image_id, std::move(m));
  }
  std::filesystem::create_directories(o.out);

  Json splits = Json::array();
  std::vector<double> precision, recall, f_score;
  for (int s = 0; s < o.splits; ++s) {
    const auto split = make_split(dataset, o.train, o.val, o.seed + static_cast<std::uint64_t>(s), selected);
    const auto dir = o.out / fmt::format("split_{}", s);
    log(fmt::format("split {}: {} train, {} val, {} test", s, split.train.size(), split.val.size(), split.test.size()));
    const auto model = learn_selected(dataset, markers, selected, split, o.spec, split.train, o.seed);
    save_model_dir(dir / "model", model);
    const auto train = extract_feature_set(dataset, split.train, model);
    auto cfg = o.classifier;
    cfg.train.seed = o.seed + static_cast<std::uint64_t>(s);
    const auto clf = train_classifier(train, cfg);
    save_classifier(dir / "classifier", clf);

    Json entry{{"split", s}, {"seed", split.seed}, {"train", split.train.size()}};
    for (const char* name : {"val", "test"}) {
      const auto& ids = split.named(name);
      if (ids.empty()) continue;
      const auto feats = extract_feature_set(dataset, ids, model);
      entry[name] = evaluation_json(clf.predict(feats.features), feats.labels, o.positive_class);
    }
    const char* report = entry.contains("test") ? "test" : "val";
    if (!entry.contains(report)) throw ValidationError("split leaves no images to evaluate");
    const auto& m = entry[report]["metrics"];
    precision.push_back(m["precision"].get<double>());
    recall.push_back(m["recall"].get<double>());
    f_score.push_back(m["f_score"].get<double>());
    entry["reported"] = report;
    write_text_file(dir / "metrics.json", entry.dump(2) + "\n");
    log(fmt::format("split {}: {} f-score {:.4f}", s, report, f_score.back()));
    splits.push_back(std::move(entry));
  }
  auto summary = [](const std::vector<double>& v) {
    const auto ms = mean_std(v);
    return Json{{"mean", ms.mean}, {"std", ms.std}};
  };
  Json result{{"v", 1},
              {"kind", o.classifier.kind},
              {"positive_class", o.positive_class},
              {"splits", std::move(splits)},
              {"precision", summary(precision)},
              {"recall", summary(recall)},
              {"f_score", summary(f_score)}};
  write_text_file(o.out / "metrics.json", result.dump(2) + "\n");
  const std::string method = o.classifier.kind == "svm" ? "FLIM+SVM" : "FLIM+MLP";
  write_text_file(o.out / "metrics.txt", metrics_table({{method, result}}));
  return result;
}

}  // namespace flim::app
