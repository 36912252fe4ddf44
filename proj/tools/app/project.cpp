#include "app/project.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "flim/errors.hpp"

namespace flim::app {
namespace {

constexpr const char* kStrokeSuffix = ".strokes.json";

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void validate_project(const ProjectState& state) {
  if (!state.split) return;
  check_disjoint(*state.split);
  const std::set<std::string> train(state.split->train.begin(), state.split->train.end());
  for (const auto& id : state.selected) {
    if (!train.contains(id)) throw ValidationError("selected image '" + id + "' is not in the training split");
  }
}

void save_manifest(const std::filesystem::path& dir, const ProjectState& state) {
  Json j{{"v", 1},
         {"dataset", state.dataset_root.string()},
         {"split", state.split ? split_to_json(*state.split) : Json()},
         {"selected", state.selected},
         {"network_spec", state.spec ? Json::parse(network_spec_to_json(*state.spec)) : Json()},
         {"metrics_history", state.metrics_history}};
  write_text(dir / "project.json", j.dump(2) + "\n");
}

void save_project_markers(const std::filesystem::path& dir, const ProjectState& state) {
  const auto mdir = dir / "markers";
  std::filesystem::create_directories(mdir);
  for (const auto& entry : std::filesystem::directory_iterator(mdir)) {
    const auto name = entry.path().filename().string();
    std::string id;
    if (ends_with(name, kStrokeSuffix)) id = name.substr(0, name.size() - std::string(kStrokeSuffix).size());
    else if (ends_with(name, ".tsv")) id = name.substr(0, name.size() - 4);
    else continue;
    const bool keep = ends_with(name, ".tsv") ? state.markers.contains(id) : state.strokes.contains(id);
    if (!keep) std::filesystem::remove(entry.path());
  }
  for (const auto& [id, m] : state.markers) write_text(mdir / (id + ".tsv"), format_markers(m));
  for (const auto& [id, text] : state.strokes) write_text(mdir / (id + kStrokeSuffix), text);
}

void save_project_model(const std::filesystem::path& dir, const ProjectState& state) {
  std::filesystem::remove_all(dir / "model");
  if (state.model) save_model_dir(dir / "model", *state.model);
}

void save_project_classifier(const std::filesystem::path& dir, const ProjectState& state) {
  std::filesystem::remove_all(dir / "classifier");
  if (state.classifier) save_classifier(dir / "classifier", *state.classifier);
}

void save_project(const std::filesystem::path& dir, const ProjectState& state) {
  validate_project(state);
  std::filesystem::create_directories(dir);
  save_project_markers(dir, state);
  save_project_model(dir, state);
  save_project_classifier(dir, state);
  save_manifest(dir, state);
}

ProjectState load_project(const std::filesystem::path& dir) {
  ProjectState state;
  if (!std::filesystem::exists(dir / "project.json")) return state;
  const auto j = parse_json(read_text(dir / "project.json"), "project.json");
  try {
    if (j.value("v", 0) != 1) throw FormatError("project.json: unsupported version");
    state.dataset_root = j.at("dataset").get<std::string>();
    if (!j.at("split").is_null()) state.split = split_from_json(j.at("split"));
    state.selected = j.at("selected").get<std::vector<std::string>>();
    if (!j.at("network_spec").is_null()) state.spec = parse_network_spec(j.at("network_spec").dump());
    for (const auto& m : j.at("metrics_history")) state.metrics_history.push_back(m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("project.json: ") + e.what());
  }
  const auto mdir = dir / "markers";
  if (std::filesystem::exists(mdir)) {
    for (auto& m : load_marker_dir(mdir)) state.markers.emplace(m.image_id, std::move(m));
    for (const auto& entry : std::filesystem::directory_iterator(mdir)) {
      const auto name = entry.path().filename().string();
      if (!ends_with(name, kStrokeSuffix)) continue;
      state.strokes.emplace(name.substr(0, name.size() - std::string(kStrokeSuffix).size()), read_text(entry.path()));
    }
  }
  if (std::filesystem::exists(dir / "model" / "network.flimnet")) state.model = load_network(dir / "model" / "network.flimnet");
  if (std::filesystem::exists(dir / "classifier" / "classifier.json")) state.classifier = load_classifier(dir / "classifier");
  validate_project(state);
  return state;
}

}  // namespace flim::app
