#include "app/server.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "app/jobs.hpp"
#include "app/pipeline.hpp"
#include "app/project.hpp"
#include "flim/errors.hpp"
#include "flim/features.hpp"
#include "flim/image_io.hpp"

namespace flim::app {
namespace {

constexpr const char* kJson = "application/json";

struct HttpError : std::runtime_error {
  HttpError(int status, std::string kind, const std::string& message)
      : std::runtime_error(message), status(status), kind(std::move(kind)) {}
  int status;
  std::string kind;
};

HttpError not_found(const std::string& message) { return {404, "NotFound", message}; }
HttpError conflict(const std::string& message) { return {409, "Conflict", message}; }

bool is_client_error(const std::string& kind) {
  static const std::set<std::string> kinds{"ValidationError",   "ParseError",        "ConfigError",
                                           "EmptyStrokeError",  "BadPerplexityError", "TooFewPointsError",
                                           "BadKError",         "BadPatchSizeError", "InsufficientMarkersError",
                                           "BadWindowError",    "SingleClassError",  "DimMismatchError"};
  return kinds.contains(kind);
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  send_json(res, Json{{"v", 1}, {"error", kind}, {"message", message}}, status);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

int parse_int(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("{} must be an integer, got '{}'", what, text));
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::shared_mutex state_mutex;
  ProjectState state;
  std::optional<DatasetIndex> dataset;
  /// Bumped whenever the network changes; features cached under an older
  /// generation are stale.
  std::uint64_t model_generation = 0;
  std::mutex feature_mutex;
  std::map<std::string, std::pair<std::uint64_t, FeatureSet>> feature_cache;
  std::mutex file_mutex;
  JobManager jobs;

  explicit Impl(ServiceOptions o) : options(std::move(o)) {
    state = load_project(options.project);
    if (options.dataset) state.dataset_root = std::filesystem::absolute(*options.dataset);
    if (!state.dataset_root.empty()) {
      dataset = load_dataset(state.dataset_root);
      save_manifest(options.project, state);
    }
    routes();
  }

  // ---- helpers -------------------------------------------------------------

  const DatasetIndex& require_dataset() const {
    if (!dataset) throw conflict("project has no dataset");
    return *dataset;
  }

  const DatasetEntry& require_image(const std::string& id) const {
    const auto* e = require_dataset().find(id);
    if (e == nullptr) throw not_found("unknown image '" + id + "'");
    return *e;
  }

  std::vector<std::string> split_ids(const std::string& name) {
    std::shared_lock lock(state_mutex);
    if (name.empty() || name == "all") {
      std::vector<std::string> ids;
      for (const auto& e : require_dataset().entries) ids.push_back(e.id);
      return ids;
    }
    if (name != "train" && name != "val" && name != "test") throw ValidationError("unknown split '" + name + "'");
    if (!state.split) throw conflict("project has no split; run `flim split` first");
    return state.split->named(name);
  }

  void invalidate_after_model() {
    std::lock_guard lock(feature_mutex);
    ++model_generation;
    feature_cache.clear();
    std::filesystem::remove_all(options.project / "features");
    clear_embeddings([](const std::string& name) { return name.rfind("input_", 0) != 0; });
  }

  void clear_embeddings(const std::function<bool(const std::string&)>& match) {
    std::lock_guard lock(file_mutex);
    const auto dir = options.project / "embeddings";
    if (!std::filesystem::exists(dir)) return;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (match(entry.path().filename().string())) std::filesystem::remove(entry.path());
    }
  }

  /// Features of a split under the current network, cached in memory and on disk.
  FeatureSet features_for(const std::string& split, const NetworkModel& model, std::uint64_t generation) {
    std::lock_guard lock(feature_mutex);
    if (generation != model_generation) throw conflict("the network changed while the job was running");
    const auto it = feature_cache.find(split);
    if (it != feature_cache.end() && it->second.first == generation) return it->second.second;
    const auto dir = options.project / "features" / split;
    FeatureSet set;
    const auto ids = split_ids(split);
    bool loaded = false;
    if (std::filesystem::exists(dir / "features.bin")) {
      try {
        set = load_feature_set(dir);
        loaded = set.ids == ids;
      } catch (const flim::Error&) {
        loaded = false;
      }
    }
    if (!loaded) {
      set = extract_feature_set(require_dataset(), ids, model);
      save_feature_set(dir, set);
    }
    feature_cache[split] = {generation, set};
    return set;
  }

  static Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    auto j = parse_json(req.body, "request body");
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    if (j.contains("v") && j["v"] != 1) throw ValidationError("unsupported schema version");
    return j;
  }

  template <typename Fn>
  httplib::Server::Handler wrap(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.kind, e.what());
      } catch (const flim::Error& e) {
        send_error(res, is_client_error(e.kind()) ? 400 : 500, e.kind(), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "InternalError", e.what());
      }
    };
  }

  // ---- routes --------------------------------------------------------------

  void routes() {
    server.Get("/api/images", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto ids = split_ids(req.get_param_value("split"));
      std::shared_lock lock(state_mutex);
      const std::set<std::string> selected(state.selected.begin(), state.selected.end());
      Json images = Json::array();
      for (const auto& id : ids) {
        const auto& e = require_image(id);
        images.push_back(Json{{"id", id},
                              {"label", e.label},
                              {"thumbnail", "/api/images/" + id + "/thumb"},
                              {"raw", "/api/images/" + id + "/raw"},
                              {"marked", state.markers.contains(id)},
                              {"selected", selected.contains(id)}});
      }
      send_json(res, Json{{"v", 1}, {"classes", class_legend()}, {"images", std::move(images)}});
    }));

    server.Get("/api/images/:id/raw", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = require_image(req.path_params.at("id"));
      const auto png = encode_png(decode_rgb(e.path));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Get("/api/images/:id/thumb", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = require_image(req.path_params.at("id"));
      const auto path = options.project / "thumbs" / (e.id + ".png");
      std::string bytes;
      {
        std::lock_guard lock(file_mutex);
        if (!std::filesystem::exists(path)) {
          const auto png = encode_png(resize_to_fit(decode_rgb(e.path), 128));
          write_bytes(path, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
        }
        bytes = read_text(path);
      }
      res.set_content(bytes, "image/png");
    }));

    server.Get("/api/split", wrap([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      if (!state.split) throw not_found("project has no split");
      send_json(res, split_to_json(*state.split));
    }));

    server.Get("/api/selection", wrap([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      send_json(res, Json{{"v", 1}, {"ids", state.selected}});
    }));

    server.Put("/api/selection", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      const auto& ids_json = require(body, "ids");
      if (!ids_json.is_array()) throw ValidationError("'ids' must be an array");
      std::vector<std::string> ids;
      std::set<std::string> seen;
      for (const auto& v : ids_json) {
        if (!v.is_string()) throw ValidationError("'ids' must hold strings");
        const auto id = v.get<std::string>();
        require_image(id);
        if (seen.insert(id).second) ids.push_back(id);
      }
      std::unique_lock lock(state_mutex);
      auto next = state;
      next.selected = ids;
      validate_project(next);
      state = std::move(next);
      save_manifest(options.project, state);
      send_json(res, Json{{"v", 1}, {"ids", state.selected}});
    }));

    server.Get("/api/markers", wrap([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      Json ids = Json::array();
      for (const auto& [id, _] : state.markers) ids.push_back(id);
      send_json(res, Json{{"v", 1}, {"ids", std::move(ids)}});
    }));

    server.Put("/api/markers/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = require_image(req.path_params.at("id"));
      const auto payload = parse_stroke_payload(req.body);
      if (payload.image_id != e.id) {
        throw ValidationError("payload image_id '" + payload.image_id + "' does not match '" + e.id + "'");
      }
      const auto raster = decode_rgb(e.path);
      auto markers = rasterize_strokes(payload.strokes, raster.width, raster.height);
      markers.image_id = e.id;
      markers.validate(require_dataset().classes);
      std::unique_lock lock(state_mutex);
      state.markers[e.id] = markers;
      state.strokes[e.id] = req.body;
      save_project_markers(options.project, state);
      send_json(res, Json{{"v", 1}, {"image_id", e.id}, {"pixels", markers.pixels.size()}});
    }));

    server.Get("/api/markers/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = require_image(req.path_params.at("id"));
      std::shared_lock lock(state_mutex);
      const auto it = state.strokes.find(e.id);
      if (it == state.strokes.end()) throw not_found("no strokes stored for '" + e.id + "'");
      res.set_content(it->second, kJson);
    }));

    server.Delete("/api/markers/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = require_image(req.path_params.at("id"));
      std::unique_lock lock(state_mutex);
      if (state.markers.erase(e.id) + state.strokes.erase(e.id) == 0) throw not_found("no markers for '" + e.id + "'");
      save_project_markers(options.project, state);
      send_json(res, Json{{"v", 1}, {"image_id", e.id}, {"deleted", true}});
    }));

    server.Get("/api/markers/:id/pixels", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto& e = require_image(req.path_params.at("id"));
      std::shared_lock lock(state_mutex);
      const auto it = state.markers.find(e.id);
      if (it == state.markers.end()) throw not_found("no markers for '" + e.id + "'");
      Json pixels = Json::array();
      for (const auto& p : it->second.pixels) pixels.push_back(Json::array({p.x, p.y, p.label}));
      send_json(res, Json{{"v", 1},
                          {"image_id", e.id},
                          {"width", it->second.width},
                          {"height", it->second.height},
                          {"pixels", std::move(pixels)}});
    }));

    server.Post("/api/learn", wrap([this](const httplib::Request& req, httplib::Response& res) { post_learn(req, res); }));

    server.Get("/api/jobs/:id", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto status = jobs.status(req.path_params.at("id"));
      if (!status) throw not_found("unknown job '" + req.path_params.at("id") + "'");
      send_json(res, *status);
    }));

    server.Get("/api/model", wrap([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      if (!state.model) throw not_found("no learned network");
      Json layers = Json::array();
      for (const auto& l : state.model->layers) {
        layers.push_back(Json{{"patch_size", l.spec.patch_size},
                              {"filters", l.bank.count()},
                              {"filter_classes", l.bank.classes},
                              {"pool_window", l.spec.pool_window},
                              {"pool_stride", l.spec.pool_stride},
                              {"batch_norm", l.spec.batch_norm}});
      }
      send_json(res, Json{{"v", 1},
                          {"input_bands", state.model->input_bands},
                          {"output_channels", state.model->output_channels()},
                          {"layers", std::move(layers)}});
    }));

    server.Get("/api/projection",
               wrap([this](const httplib::Request& req, httplib::Response& res) { get_projection(req, res); }));

    server.Post("/api/classifier",
                wrap([this](const httplib::Request& req, httplib::Response& res) { post_classifier(req, res); }));

    server.Get("/api/metrics", wrap([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_mutex);
      if (state.metrics_history.empty()) throw not_found("no metrics yet");
      send_json(res, state.metrics_history.back());
    }));

    server.Get("/api/activations/:id/layer/:n", wrap([this](const httplib::Request& req, httplib::Response& res) {
      get_activation(req, res);
    }));

    server.Get("/api/misclassified", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto split = req.has_param("split") ? req.get_param_value("split") : std::string("val");
      NetworkModel model;
      ClassifierModel clf;
      std::uint64_t generation = 0;
      {
        std::shared_lock lock(state_mutex);
        if (!state.model || !state.classifier) throw conflict("no trained classifier");
        model = *state.model;
        clf = *state.classifier;
      }
      {
        std::lock_guard lock(feature_mutex);
        generation = model_generation;
      }
      const auto feats = features_for(split, model, generation);
      const auto predicted = clf.predict(feats.features);
      Json items = Json::array();
      for (std::size_t i = 0; i < feats.ids.size(); ++i) {
        if (predicted[i] != feats.labels[i]) {
          items.push_back(Json{{"id", feats.ids[i]}, {"predicted", predicted[i]}, {"truth", feats.labels[i]}});
        }
      }
      send_json(res, Json{{"v", 1}, {"split", split}, {"total", feats.ids.size()}, {"items", std::move(items)}});
    }));

    if (options.ui_dir) {
      server.set_mount_point("/", options.ui_dir->string());
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, Json{{"v", 1}, {"service", "flim"}, {"ui", false}});
      });
    }
  }

  Json class_legend() const {
    // class 1 cyan, class 2 orange, further classes from a fixed palette
    static const std::vector<std::string> palette{"#00e5ff", "#ff9800", "#8bc34a", "#e91e63", "#9c27b0", "#ffeb3b"};
    Json out = Json::array();
    for (int c = 1; c <= require_dataset().classes; ++c) {
      out.push_back(Json{{"label", c}, {"color", palette[static_cast<std::size_t>(c - 1) % palette.size()]}});
    }
    return out;
  }

  void post_learn(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const Json& config = body.contains("layers") ? body : require(body, "config");
    const auto spec = parse_network_spec(config.dump());
    const auto seed = body.value("seed", std::uint64_t{0});
    const auto& dataset_ref = require_dataset();

    std::vector<std::string> selected;
    std::map<std::string, MarkerSet> markers;
    std::optional<Split> split;
    {
      std::unique_lock lock(state_mutex);
      if (body.contains("selected")) {
        auto next = state;
        next.selected = body.at("selected").get<std::vector<std::string>>();
        for (const auto& id : next.selected) require_image(id);
        validate_project(next);
        state = std::move(next);
        save_manifest(options.project, state);
      }
      selected = state.selected;
      if (selected.empty()) {
        for (const auto& [id, _] : state.markers) selected.push_back(id);
      }
      for (const auto& id : selected) {
        const auto it = state.markers.find(id);
        if (it == state.markers.end()) throw ValidationError("selected image '" + id + "' has no markers");
        markers.emplace(id, it->second);
      }
      if (selected.empty()) throw ValidationError("no marked images to learn from");
      split = state.split;
    }
    const auto norm_ids = split ? split->train : std::vector<std::string>{};
    const auto started = jobs.start_exclusive("learn", "", [=, this](const JobManager::Progress& progress) {
      progress(0.1, "learning filters");
      auto model = learn_selected(dataset_ref, markers, selected, split, spec, norm_ids, seed);
      progress(0.9, "saving");
      invalidate_after_model();
      std::unique_lock lock(state_mutex);
      state.spec = spec;
      state.model = model;
      state.classifier.reset();
      save_project_model(options.project, state);
      save_project_classifier(options.project, state);
      save_manifest(options.project, state);
      Json filters = Json::array();
      for (const auto& l : model.layers) filters.push_back(l.bank.count());
      return Json{{"layers", model.layers.size()}, {"filters", std::move(filters)},
                  {"output_channels", model.output_channels()}};
    });
    if (!started.created) throw conflict("a learn job is already running (" + started.id + ")");
    send_json(res, Json{{"v", 1}, {"job", started.id}}, 202);
  }

  void post_classifier(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    Json cfg_json = body.contains("config") ? body.at("config") : Json::object();
    if (!cfg_json.is_object()) throw ValidationError("'config' must be an object");
    if (body.contains("kind")) cfg_json["kind"] = body.at("kind");
    const auto config = parse_classifier_config(cfg_json);
    NetworkModel model;
    std::uint64_t generation = 0;
    std::string eval_split = "val";
    {
      std::shared_lock lock(state_mutex);
      if (!state.model) throw conflict("no learned network; POST /api/learn first");
      if (!state.split) throw conflict("project has no split");
      model = *state.model;
      if (state.split->val.empty()) eval_split = "test";
    }
    {
      std::lock_guard lock(feature_mutex);
      generation = model_generation;
    }
    const auto started = jobs.start_exclusive("classifier", config.kind, [=, this](const JobManager::Progress& progress) {
      progress(0.05, "extracting train features");
      const auto train = features_for("train", model, generation);
      progress(0.4, "training");
      auto clf = train_classifier(train, config);
      progress(0.8, "evaluating on " + eval_split);
      const auto eval = features_for(eval_split, model, generation);
      auto report = evaluation_json(clf.predict(eval.features), eval.labels, 1);
      report["kind"] = config.kind;
      report["split"] = eval_split;
      report["config"] = classifier_config_to_json(config);
      clear_embeddings([](const std::string& name) { return name.rfind("classifier_", 0) == 0; });
      std::unique_lock lock(state_mutex);
      if (!state.model || !(*state.model == model)) throw conflict("the network changed while training");
      state.classifier = std::move(clf);
      state.metrics_history.push_back(report);
      save_project_classifier(options.project, state);
      save_manifest(options.project, state);
      return report;
    });
    if (!started.created) throw conflict("a classifier job is already running (" + started.id + ")");
    send_json(res, Json{{"v", 1}, {"job", started.id}}, 202);
  }

  void get_projection(const httplib::Request& req, httplib::Response& res) {
    EmbeddingRequest request;
    request.space = req.has_param("space") ? req.get_param_value("space") : "input";
    const auto split = req.has_param("split") ? req.get_param_value("split") : std::string("train");
    if (req.has_param("perplexity")) {
      try {
        request.perplexity = std::stod(req.get_param_value("perplexity"));
      } catch (const std::exception&) {
        throw ValidationError("perplexity must be a number");
      }
      if (!(request.perplexity > 0.0)) throw ValidationError("perplexity must be positive");
    }
    if (req.has_param("iterations")) request.iterations = parse_int(req.get_param_value("iterations"), "iterations");
    if (req.has_param("seed")) request.seed = static_cast<std::uint64_t>(parse_int(req.get_param_value("seed"), "seed"));
    if (request.iterations < 1) throw ValidationError("iterations must be positive");
    const bool layer_space = request.space.rfind("layer", 0) == 0;
    if (request.space != "input" && request.space != "classifier" && !layer_space) {
      throw ValidationError("unknown space '" + request.space + "' (expected input, layer<n>, or classifier)");
    }

    const auto ids = split_ids(split);
    if (ids.size() < 4) throw ValidationError("a projection needs at least 4 images");
    std::optional<NetworkModel> model;
    std::optional<ClassifierModel> clf;
    {
      std::shared_lock lock(state_mutex);
      model = state.model;
      clf = state.classifier;
    }
    if (layer_space && !model) throw conflict("no learned network for space '" + request.space + "'");
    if (request.space == "classifier" && (!model || !clf)) throw conflict("no trained classifier");

    const auto key = fmt::format("{}_{}_p{}_i{}_s{}", request.space, split, request.perplexity, request.iterations,
                                 request.seed);
    const auto path = options.project / "embeddings" / (key + ".json");
    {
      std::lock_guard lock(file_mutex);
      if (std::filesystem::exists(path)) {
        res.set_content(read_text(path), kJson);
        return;
      }
    }
    const auto started = jobs.start_exclusive("projection", key, [=, this](const JobManager::Progress& progress) {
      progress(0.1, "embedding " + request.space);
      auto j = compute_embedding(require_dataset(), ids, request, model ? &*model : nullptr, clf ? &*clf : nullptr);
      j["split"] = split;
      std::lock_guard lock(file_mutex);
      write_bytes(path, j.dump());
      return Json{{"space", request.space}, {"split", split}, {"points", j["points"].size()}};
    });
    if (!started.created) {
      const auto running = jobs.active("projection");
      if (running && running->second != key) throw conflict("another projection is being computed (" + started.id + ")");
    }
    send_json(res, Json{{"v", 1}, {"job", started.id}, {"status", "pending"}}, 202);
  }

  void get_activation(const httplib::Request& req, httplib::Response& res) {
    const auto& e = require_image(req.path_params.at("id"));
    const int layer = parse_int(req.path_params.at("n"), "layer");
    const int channel = req.has_param("channel") ? parse_int(req.get_param_value("channel"), "channel") : 0;
    std::optional<NetworkModel> model;
    {
      std::shared_lock lock(state_mutex);
      model = state.model;
    }
    if (!model) throw conflict("no learned network");
    if (layer < 0 || layer > static_cast<int>(model->layers.size())) {
      throw ValidationError(fmt::format("layer must lie in 0..{}", model->layers.size()));
    }
    auto image = load_image(e.path);
    image.id = e.id;
    const auto map = forward_preserving(image, *model, layer);
    const auto& t = map.data;
    if (channel < 0 || channel >= t.channels()) {
      throw ValidationError(fmt::format("channel must lie in 0..{}", t.channels() - 1));
    }
    float lo = std::numeric_limits<float>::infinity();
    float hi = -lo;
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        lo = std::min(lo, t.at(y, x, channel));
        hi = std::max(hi, t.at(y, x, channel));
      }
    }
    Raster8 gray;
    gray.width = t.width();
    gray.height = t.height();
    gray.channels = 1;
    gray.pixels.resize(static_cast<std::size_t>(gray.width) * gray.height);
    const float range = hi - lo;
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        const float v = range > 0.0f ? (t.at(y, x, channel) - lo) / range : 0.0f;
        gray.pixel(y, x)[0] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
    const auto png = encode_png(gray);
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() {
  stop();
  impl_->jobs.wait_all();
}

int Service::bind(int port) {
  if (port == 0) return impl_->server.bind_to_any_port(impl_->options.host);
  if (!impl_->server.bind_to_port(impl_->options.host, port)) throw IoError(fmt::format("cannot bind port {}", port));
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

void Service::wait_for_jobs() { impl_->jobs.wait_all(); }

}  // namespace flim::app
