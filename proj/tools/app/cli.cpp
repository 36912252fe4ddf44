#include "app/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "app/pipeline.hpp"
#include "app/project.hpp"
#include "app/server.hpp"
#include "flim/errors.hpp"
#include "flim/synthetic.hpp"

namespace flim::app {
namespace {

Service* g_service = nullptr;

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path default_project() {
  const char* env = std::getenv("FLIM_PROJECT");
  return env != nullptr ? std::filesystem::path(env) : std::filesystem::path("flim-project");
}

DatasetIndex project_dataset(const ProjectState& state) {
  if (state.dataset_root.empty()) throw ValidationError("project has no dataset; run `flim split --dataset` first");
  return load_dataset(state.dataset_root);
}

const Split& project_split(const ProjectState& state) {
  if (!state.split) throw ValidationError("project has no split; run `flim split` first");
  return *state.split;
}

struct Args {
  std::filesystem::path project = default_project();
  std::filesystem::path dataset, markers, config, out, model, feats, clf, ui;
  std::string split = "train", kind = "svm", ids, space = "input", hidden;
  std::size_t train = 200, val = 2000;
  std::uint64_t seed = 0;
  int splits = 3, layer = 0, port = 0, positive = 1, iterations = 1000;
  int tiles = 100, size = 64, marked = 2, epochs = 0, batch = 0;
  double perplexity = 30.0, C = 0.01, lr = 0.0;
  bool select_marked = false;
  std::string force_train;
};

ClassifierConfig classifier_from_args(const Args& a) {
  Json j{{"kind", a.kind}, {"C", a.C}, {"seed", a.seed}};
  if (!a.hidden.empty()) {
    std::vector<int> sizes;
    for (const auto& s : split_csv(a.hidden)) sizes.push_back(std::stoi(s));
    j["hidden"] = sizes;
  }
  if (a.epochs > 0) j["epochs"] = a.epochs;
  if (a.batch > 0) j["batch_size"] = a.batch;
  if (a.lr > 0.0) j["learning_rate"] = a.lr;
  return parse_classifier_config(j);
}

void cmd_synth(const Args& a, std::ostream& out) {
  if (a.out.empty()) throw ValidationError("--out is required");
  SyntheticOptions o;
  o.tiles_per_class = a.tiles;
  o.size = a.size;
  o.marked_per_class = a.marked;
  o.seed = a.seed;
  const auto data = write_synthetic(a.out, o);
  out << Json{{"v", 1},
              {"dataset", (a.out / "dataset").string()},
              {"markers", (a.out / "markers").string()},
              {"tiles", data.tiles.size()},
              {"marked", data.markers.size()}}
             .dump()
      << "\n";
}

void cmd_split(const Args& a, std::ostream& out) {
  auto state = load_project(a.project);
  if (!a.dataset.empty()) state.dataset_root = std::filesystem::absolute(a.dataset);
  const auto dataset = project_dataset(state);
  state.split = make_split(dataset, a.train, a.val, a.seed, split_csv(a.force_train));
  std::erase_if(state.selected, [&](const std::string& id) {
    return std::find(state.split->train.begin(), state.split->train.end(), id) == state.split->train.end();
  });
  save_manifest(a.project, state);
  if (!a.out.empty()) write_text_file(a.out, split_to_json(*state.split).dump(2) + "\n");
  out << Json{{"v", 1},
              {"train", state.split->train.size()},
              {"val", state.split->val.size()},
              {"test", state.split->test.size()},
              {"seed", a.seed}}
             .dump()
      << "\n";
}

void cmd_select(const Args& a, std::ostream& out) {
  auto state = load_project(a.project);
  const auto dataset = project_dataset(state);
  std::vector<std::string> ids = split_csv(a.ids);
  if (!a.markers.empty()) {
    for (const auto& m : load_marker_dir(a.markers)) ids.push_back(m.image_id);
  }
  std::set<std::string> seen;
  state.selected.clear();
  for (const auto& id : ids) {
    if (dataset.find(id) == nullptr) throw ValidationError("image '" + id + "' is not in the dataset");
    if (seen.insert(id).second) state.selected.push_back(id);
  }
  validate_project(state);
  save_manifest(a.project, state);
  out << Json{{"v", 1}, {"selected", state.selected}}.dump() << "\n";
}

void cmd_project(const Args& a, std::ostream& out) {
  const auto state = load_project(a.project);
  const auto dataset = project_dataset(state);
  std::vector<std::string> ids;
  if (a.split == "all") {
    for (const auto& e : dataset.entries) ids.push_back(e.id);
  } else {
    ids = project_split(state).named(a.split);
  }
  EmbeddingRequest r;
  r.space = a.space;
  r.perplexity = a.perplexity;
  r.iterations = a.iterations;
  r.seed = a.seed;
  auto j = compute_embedding(dataset, ids, r, state.model ? &*state.model : nullptr,
                             state.classifier ? &*state.classifier : nullptr);
  j["split"] = a.split;
  if (a.out.empty()) {
    out << j.dump() << "\n";
  } else {
    write_text_file(a.out, j.dump(2) + "\n");
    out << Json{{"v", 1}, {"points", j["points"].size()}, {"out", a.out.string()}}.dump() << "\n";
  }
}

void cmd_learn(const Args& a, std::ostream& out) {
  auto state = load_project(a.project);
  const auto dataset = project_dataset(state);
  auto spec = load_network_spec(a.config);
  if (a.layer > 0) {
    if (a.layer > static_cast<int>(spec.layers.size())) throw ValidationError("--layer exceeds the network depth");
    spec.layers.resize(static_cast<std::size_t>(a.layer));
  }
  if (!a.markers.empty()) {
    state.markers.clear();
    state.strokes.clear();
    for (auto& m : load_marker_dir(a.markers)) {
      if (dataset.find(m.image_id) == nullptr) throw ValidationError("marker file for unknown image '" + m.image_id + "'");
      state.markers.emplace(m.image_id, std::move(m));
    }
  }
  if (a.select_marked) {
    state.selected.clear();
    for (const auto& [id, _] : state.markers) state.selected.push_back(id);
  }
  validate_project(state);
  const auto norm_ids = state.split ? state.split->train : std::vector<std::string>{};
  auto model = learn_selected(dataset, state.markers, state.selected, state.split, spec, norm_ids, a.seed);
  if (!a.out.empty()) save_model_dir(a.out, model);
  state.spec = spec;
  state.model = std::move(model);
  state.classifier.reset();
  std::filesystem::remove_all(a.project / "features");
  std::filesystem::remove_all(a.project / "embeddings");
  save_project(a.project, state);
  Json filters = Json::array();
  for (const auto& l : state.model->layers) filters.push_back(l.bank.count());
  out << Json{{"v", 1}, {"layers", state.model->layers.size()}, {"filters", filters}}.dump() << "\n";
}

void cmd_extract(const Args& a, std::ostream& out) {
  const auto state = load_project(a.project);
  const auto dataset = project_dataset(state);
  const auto model = a.model.empty() ? (state.model ? *state.model : throw ValidationError("no model; pass --model"))
                                     : load_model_path(a.model);
  const auto& ids = project_split(state).named(a.split);
  const auto set = extract_feature_set(dataset, ids, model);
  if (a.out.empty()) throw ValidationError("--out is required");
  save_feature_set(a.out, set);
  out << Json{{"v", 1}, {"split", a.split}, {"rows", set.features.rows()}, {"dimension", set.features.cols()}}.dump()
      << "\n";
}

void cmd_train_clf(const Args& a, std::ostream& out) {
  const auto set = load_feature_set(a.feats);
  const auto config = classifier_from_args(a);
  const auto clf = train_classifier(set, config);
  if (a.out.empty()) throw ValidationError("--out is required");
  save_classifier(a.out, clf);
  out << Json{{"v", 1}, {"kind", clf.kind}, {"examples", set.ids.size()}, {"out", a.out.string()}}.dump() << "\n";
}

void cmd_eval(const Args& a, std::ostream& out) {
  const auto set = load_feature_set(a.feats);
  const auto clf = load_classifier(a.clf);
  const auto report = evaluation_json(clf.predict(set.features), set.labels, a.positive);
  if (!a.out.empty()) write_text_file(a.out, report.dump(2) + "\n");
  out << metrics_table({{clf.kind == "svm" ? "FLIM+SVM" : "FLIM+MLP", report["metrics"]}});
}

void cmd_run_all(const Args& a, std::ostream& out) {
  RunAllOptions o;
  o.dataset = a.dataset;
  o.markers = a.markers;
  o.spec = load_network_spec(a.config);
  o.splits = a.splits;
  o.seed = a.seed;
  o.train = a.train;
  o.val = a.val;
  o.classifier = classifier_from_args(a);
  o.positive_class = a.positive;
  o.out = a.out;
  o.log = [](const std::string& msg) { spdlog::info("{}", msg); };
  if (o.out.empty()) throw ValidationError("--out is required");
  const auto result = run_all(o);
  out << metrics_table({{o.classifier.kind == "svm" ? "FLIM+SVM" : "FLIM+MLP", result}});
}

void cmd_serve(const Args& a, std::ostream& out) {
  int port = a.port;
  if (port == 0) {
    const char* env = std::getenv("FLIM_PORT");
    port = env != nullptr ? std::atoi(env) : 8080;
  }
  ServiceOptions o;
  o.project = a.project;
  if (!a.ui.empty()) o.ui_dir = a.ui;
  if (!a.dataset.empty()) o.dataset = a.dataset;
  Service service(o);
  const int bound = service.bind(port);
  out << Json{{"v", 1}, {"listening", fmt::format("http://127.0.0.1:{}", bound)}}.dump() << std::endl;
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service != nullptr) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service != nullptr) g_service->stop();
  });
  service.listen();
  g_service = nullptr;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << Json{{"v", 1}, {"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Feature learning from image markers"};
  app.require_subcommand(1);
  app.add_option("--project", a.project, "Project directory (env FLIM_PROJECT)");

  auto* synth = app.add_subcommand("synth", "Generate the two-class synthetic texture dataset with markers");
  synth->add_option("--out", a.out)->required();
  synth->add_option("--tiles-per-class", a.tiles);
  synth->add_option("--size", a.size);
  synth->add_option("--marked-per-class", a.marked);
  synth->add_option("--seed", a.seed);

  auto* split = app.add_subcommand("split", "Write a seeded train/val/test split into the project");
  split->add_option("--dataset", a.dataset);
  split->add_option("--train", a.train)->required();
  split->add_option("--val", a.val)->required();
  split->add_option("--seed", a.seed);
  split->add_option("--force-train", a.force_train, "Comma-separated ids kept in train");
  split->add_option("--out", a.out, "Also write the split manifest here");

  auto* select = app.add_subcommand("select", "Set the images selected for marking");
  select->add_option("--ids", a.ids, "Comma-separated image ids");
  select->add_option("--markers", a.markers, "Select every image with a marker file here");

  auto* project = app.add_subcommand("project", "t-SNE projection of a split");
  project->add_option("--split", a.split);
  project->add_option("--space", a.space, "input | layer<n> | classifier");
  project->add_option("--perplexity", a.perplexity);
  project->add_option("--iterations", a.iterations);
  project->add_option("--seed", a.seed);
  project->add_option("--out", a.out);

  auto* learn = app.add_subcommand("learn", "Learn the network from the selected images' markers");
  learn->add_option("--config", a.config)->required();
  learn->add_option("--markers", a.markers);
  learn->add_option("--out", a.out);
  learn->add_option("--layer", a.layer, "Learn layers 1..n only");
  learn->add_option("--seed", a.seed);
  learn->add_flag("--select-marked", a.select_marked, "Select every image that has markers");

  auto* extract = app.add_subcommand("extract", "Extract features of a split");
  extract->add_option("--model", a.model);
  extract->add_option("--split", a.split);
  extract->add_option("--out", a.out)->required();

  auto* train_clf = app.add_subcommand("train-clf", "Train a classifier on extracted features");
  train_clf->add_option("--kind", a.kind)->check(CLI::IsMember({"svm", "mlp"}));
  train_clf->add_option("--feats", a.feats)->required();
  train_clf->add_option("--out", a.out)->required();
  train_clf->add_option("--C", a.C);
  train_clf->add_option("--hidden", a.hidden, "Comma-separated hidden sizes");
  train_clf->add_option("--epochs", a.epochs);
  train_clf->add_option("--batch-size", a.batch);
  train_clf->add_option("--lr", a.lr);
  train_clf->add_option("--seed", a.seed);

  auto* eval = app.add_subcommand("eval", "Evaluate a classifier on extracted features");
  eval->add_option("--clf", a.clf)->required();
  eval->add_option("--feats", a.feats)->required();
  eval->add_option("--out", a.out);
  eval->add_option("--positive", a.positive);

  auto* run_all_cmd = app.add_subcommand("run-all", "Full pipeline over several random splits");
  run_all_cmd->add_option("--dataset", a.dataset)->required();
  run_all_cmd->add_option("--markers", a.markers)->required();
  run_all_cmd->add_option("--config", a.config)->required();
  run_all_cmd->add_option("--splits", a.splits);
  run_all_cmd->add_option("--seed", a.seed);
  run_all_cmd->add_option("--train", a.train);
  run_all_cmd->add_option("--val", a.val);
  run_all_cmd->add_option("--kind", a.kind)->check(CLI::IsMember({"svm", "mlp"}));
  run_all_cmd->add_option("--C", a.C);
  run_all_cmd->add_option("--hidden", a.hidden);
  run_all_cmd->add_option("--epochs", a.epochs);
  run_all_cmd->add_option("--batch-size", a.batch);
  run_all_cmd->add_option("--lr", a.lr);
  run_all_cmd->add_option("--positive", a.positive);
  run_all_cmd->add_option("--out", a.out)->required();

  auto* serve = app.add_subcommand("serve", "HTTP API and static UI");
  serve->add_option("--port", a.port, "Port (env FLIM_PORT, default 8080)");
  serve->add_option("--ui", a.ui);
  serve->add_option("--dataset", a.dataset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (*synth) cmd_synth(a, out);
    else if (*split) cmd_split(a, out);
    else if (*select) cmd_select(a, out);
    else if (*project) cmd_project(a, out);
    else if (*learn) cmd_learn(a, out);
    else if (*extract) cmd_extract(a, out);
    else if (*train_clf) cmd_train_clf(a, out);
    else if (*eval) cmd_eval(a, out);
    else if (*run_all_cmd) cmd_run_all(a, out);
    else if (*serve) cmd_serve(a, out);
  } catch (const flim::Error& e) {
    print_error(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "InternalError", e.what());
    return 1;
  }
  return 0;
}

}  // namespace flim::app
