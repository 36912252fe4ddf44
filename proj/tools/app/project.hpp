#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "app/json_io.hpp"
#include "app/pipeline.hpp"
#include "flim/markers.hpp"
#include "flim/network.hpp"

namespace flim::app {

/// Everything a project persists. The dataset itself is referenced by root.
struct ProjectState {
  std::filesystem::path dataset_root;
  std::optional<Split> split;
  /// The images chosen for marking.
  std::vector<std::string> selected;
  std::map<std::string, MarkerSet> markers;
  /// Stroke documents exactly as received, keyed by image id.
  std::map<std::string, std::string> strokes;
  std::optional<NetworkSpec> spec;
  std::optional<NetworkModel> model;
  std::optional<ClassifierModel> classifier;
  std::vector<Json> metrics_history;
  friend bool operator==(const ProjectState&, const ProjectState&) = default;
};

/// Throws ValidationError when splits overlap or the selection leaves train.
void validate_project(const ProjectState& state);

/// Layout under `dir`: project.json, markers/<id>.tsv (+ <id>.strokes.json),
/// model/, classifier/.
void save_project(const std::filesystem::path& dir, const ProjectState& state);
/// Only project.json.
void save_manifest(const std::filesystem::path& dir, const ProjectState& state);
/// Rewrites markers/ to match the state.
void save_project_markers(const std::filesystem::path& dir, const ProjectState& state);
void save_project_model(const std::filesystem::path& dir, const ProjectState& state);
void save_project_classifier(const std::filesystem::path& dir, const ProjectState& state);

/// A missing project.json yields an empty state.
ProjectState load_project(const std::filesystem::path& dir);

}  // namespace flim::app
