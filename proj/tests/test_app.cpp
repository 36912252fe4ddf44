#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "app/pipeline.hpp"
#include "app/project.hpp"
#include "cli_support.hpp"
#include "flim/errors.hpp"
#include "flim/synthetic.hpp"
#include "support.hpp"

using namespace flim;
using namespace flim::app;
using flim::testing::run_flim;
using flim::testing::TempDir;

namespace {

std::string config_path() { return std::string(FLIM_SOURCE_DIR) + "/configs/coconut-fig2.json"; }

void write_small_config(const std::filesystem::path& path) {
  std::ofstream(path) << R"({"input_bands":3,"layers":[{"patch_size":5,"total_filters":8,"pool_window":3,"pool_stride":4,"batch_norm":true}]})";
}

}  // namespace

TEST(Split, TenImagesGiveFourFourTwo) {
  TempDir dir;
  write_synthetic(dir.path(), {.tiles_per_class = 5, .size = 16, .marked_per_class = 1, .seed = 1});
  const auto dataset = load_dataset(dir / "dataset");
  ASSERT_EQ(dataset.entries.size(), 10u);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = make_split(dataset, 4, 4, seed);
    ASSERT_EQ(s.train.size(), 4u);
    ASSERT_EQ(s.val.size(), 4u);
    ASSERT_EQ(s.test.size(), 2u);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    ASSERT_EQ(all.size(), 10u) << "seed " << seed;
  }
  EXPECT_NE(make_split(dataset, 4, 4, 1), make_split(dataset, 4, 4, 2));
  EXPECT_EQ(make_split(dataset, 4, 4, 3), make_split(dataset, 4, 4, 3));
  EXPECT_THROW(make_split(dataset, 8, 4, 0), ValidationError);
  const auto forced = make_split(dataset, 4, 4, 5, {"c2_0004"});
  EXPECT_NE(std::find(forced.train.begin(), forced.train.end(), "c2_0004"), forced.train.end());
}

TEST(Split, CliWritesManifest) {
  TempDir dir;
  write_synthetic(dir.path(), {.tiles_per_class = 5, .size = 16, .marked_per_class = 1, .seed = 1});
  const auto project = (dir / "proj").string();
  const auto r = run_flim({"--project", project, "split", "--dataset", (dir / "dataset").string(), "--train", "4", "--val",
                           "4", "--seed", "7", "--out", (dir / "split.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["train"], 4);
  EXPECT_EQ(j["val"], 4);
  EXPECT_EQ(j["test"], 2);
  const auto split = split_from_json(Json::parse(flim::testing::slurp(dir / "split.json")));
  check_disjoint(split);
  EXPECT_EQ(load_project(project).split, split);
  Split overlapping = split;
  overlapping.val.push_back(overlapping.train.front());
  EXPECT_THROW(check_disjoint(overlapping), ValidationError);
}

TEST(Project, SaveLoadDeepEquality) {
  TempDir dir;
  const auto data = write_synthetic(dir.path(), {.tiles_per_class = 4, .size = 32, .marked_per_class = 2, .seed = 2});
  const auto dataset = load_dataset(dir / "dataset");
  ProjectState state;
  state.dataset_root = dir / "dataset";
  state.split = make_split(dataset, 6, 1, 0, {"c1_0000", "c1_0001", "c2_0000", "c2_0001"});
  for (const auto& m : data.markers) {
    state.selected.push_back(m.image_id);
    state.markers.emplace(m.image_id, m);
  }
  state.strokes["c1_0000"] = R"({"v":1,"image_id":"c1_0000","width":32,"height":32,"strokes":[]})";
  NetworkSpec spec;
  spec.layers.push_back({.patch_size = 3, .total_filters = 4, .pool_window = 3, .pool_stride = 4});
  state.spec = spec;
  state.model = learn_selected(dataset, state.markers, state.selected, state.split, spec, state.split->train, 1);
  const auto feats = extract_feature_set(dataset, state.split->train, *state.model);
  state.classifier = train_classifier(feats, ClassifierConfig{});
  state.metrics_history.push_back(Json{{"v", 1}, {"f_score", 0.5}});

  save_project(dir / "proj", state);
  const auto loaded = load_project(dir / "proj");
  EXPECT_EQ(loaded.dataset_root, state.dataset_root);
  EXPECT_EQ(loaded.split, state.split);
  EXPECT_EQ(loaded.selected, state.selected);
  EXPECT_EQ(loaded.markers, state.markers);
  EXPECT_EQ(loaded.strokes, state.strokes);
  EXPECT_EQ(loaded.spec, state.spec);
  EXPECT_EQ(loaded.model, state.model);
  EXPECT_EQ(loaded.classifier, state.classifier);
  EXPECT_EQ(loaded.metrics_history, state.metrics_history);
  EXPECT_EQ(loaded, state);
  EXPECT_EQ(load_project(dir / "missing"), ProjectState{});
}

TEST(Project, SelectionMustStayInTrain) {
  ProjectState state;
  state.split = Split{0, {"a", "b"}, {"c"}, {"d"}};
  state.selected = {"a"};
  EXPECT_NO_THROW(validate_project(state));
  state.selected = {"a", "c"};
  EXPECT_THROW(validate_project(state), ValidationError);
}

TEST(Cli, ErrorsAreJsonOnStderr) {
  const auto usage = run_flim({"no-such-command"});
  EXPECT_EQ(usage.code, 2);
  EXPECT_EQ(Json::parse(usage.err)["error"], "UsageError");
  EXPECT_TRUE(usage.out.empty());

  TempDir dir;
  const auto missing = run_flim({"--project", (dir / "p").string(), "learn", "--config", config_path()});
  EXPECT_EQ(missing.code, 1);
  const auto j = Json::parse(missing.err);
  EXPECT_EQ(j["v"], 1);
  EXPECT_EQ(j["error"], "ValidationError");
  EXPECT_FALSE(j["message"].get<std::string>().empty());

  const auto bad_config = run_flim({"--project", (dir / "p").string(), "run-all", "--dataset", (dir / "x").string(),
                                    "--markers", (dir / "y").string(), "--config", (dir / "nope.json").string(), "--out",
                                    (dir / "o").string()});
  EXPECT_EQ(bad_config.code, 1);
  EXPECT_TRUE(Json::parse(bad_config.err).contains("error"));
}

TEST(Cli, LearnRejectsMarkersOutsideSelection) {
  TempDir dir;
  write_synthetic(dir.path(), {.tiles_per_class = 4, .size = 32, .marked_per_class = 2, .seed = 3});
  const auto project = (dir / "proj").string();
  ASSERT_EQ(run_flim({"--project", project, "split", "--dataset", (dir / "dataset").string(), "--train", "6", "--val",
                      "1", "--force-train", "c1_0000,c1_0001,c2_0000,c2_0001"})
                .code,
            0);
  ASSERT_EQ(run_flim({"--project", project, "select", "--ids", "c1_0000,c2_0000"}).code, 0);
  const auto config = dir / "small.json";
  write_small_config(config);
  const auto r =
      run_flim({"--project", project, "learn", "--config", config.string(), "--markers", (dir / "markers").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(Json::parse(r.err)["error"], "ValidationError");
  EXPECT_NE(r.err.find("c1_0001"), std::string::npos) << r.err;

  const auto ok = run_flim({"--project", project, "learn", "--config", config.string(), "--markers",
                            (dir / "markers").string(), "--select-marked"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(Json::parse(ok.out)["filters"], Json::array({8}));
}

TEST(Cli, StagesAreByteIdenticalOnRerun) {
  TempDir dir;
  write_synthetic(dir.path(), {.tiles_per_class = 6, .size = 32, .marked_per_class = 2, .seed = 4});
  const auto config = dir / "small.json";
  write_small_config(config);
  auto pipeline = [&](const std::string& tag) {
    const auto project = (dir / ("proj-" + tag)).string();
    const auto out = dir / ("out-" + tag);
    std::filesystem::create_directories(out);
    auto ok = [](const flim::testing::CliResult& r) { ASSERT_EQ(r.code, 0) << r.err; };
    ok(run_flim({"--project", project, "split", "--dataset", (dir / "dataset").string(), "--train", "8", "--val", "2",
                 "--seed", "3", "--force-train", "c1_0000,c1_0001,c2_0000,c2_0001", "--out",
                 (out / "split.json").string()}));
    ok(run_flim({"--project", project, "learn", "--config", config.string(), "--markers", (dir / "markers").string(),
                 "--select-marked", "--out", (out / "model").string()}));
    ok(run_flim({"--project", project, "extract", "--split", "train", "--out", (out / "train").string()}));
    ok(run_flim({"--project", project, "extract", "--split", "val", "--out", (out / "val").string()}));
    ok(run_flim({"--project", project, "train-clf", "--kind", "mlp", "--hidden", "6", "--epochs", "5", "--lr", "0.01",
                 "--feats", (out / "train").string(), "--out", (out / "mlp").string()}));
    ok(run_flim({"--project", project, "train-clf", "--feats", (out / "train").string(), "--out",
                 (out / "svm").string()}));
    ok(run_flim({"--project", project, "eval", "--clf", (out / "svm").string(), "--feats", (out / "val").string(),
                 "--out", (out / "metrics.json").string()}));
    ok(run_flim({"--project", project, "project", "--split", "train", "--perplexity", "2", "--iterations", "200",
                 "--out", (out / "emb.json").string()}));
    return flim::testing::snapshot(out);
  };
  const auto a = pipeline("a");
  const auto b = pipeline("b");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_TRUE(a[i].second == b[i].second) << a[i].first << " differs";
  }
  const auto emb = Json::parse(flim::testing::slurp(dir / "out-a" / "emb.json"));
  EXPECT_EQ(emb["v"], 1);
  EXPECT_EQ(emb["points"].size(), 8u);
  for (const auto& p : emb["points"]) {
    EXPECT_TRUE(p.contains("id") && p.contains("x") && p.contains("y") && p.contains("label"));
  }
  const auto metrics = Json::parse(flim::testing::slurp(dir / "out-a" / "metrics.json"));
  EXPECT_TRUE(metrics["metrics"].contains("f_score"));
}

TEST(Cli, RunAllReportsMeanAndStd) {
  TempDir dir;
  write_synthetic(dir.path(), {.tiles_per_class = 8, .size = 32, .marked_per_class = 2, .seed = 5});
  const auto config = dir / "small.json";
  write_small_config(config);
  const auto r = run_flim({"run-all", "--dataset", (dir / "dataset").string(), "--markers", (dir / "markers").string(),
                           "--config", config.string(), "--splits", "2", "--train", "8", "--val", "4", "--seed", "1",
                           "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("F-score"), std::string::npos);
  const auto j = Json::parse(flim::testing::slurp(dir / "out" / "metrics.json"));
  EXPECT_EQ(j["v"], 1);
  EXPECT_EQ(j["splits"].size(), 2u);
  for (const char* key : {"precision", "recall", "f_score"}) {
    ASSERT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j[key].contains("mean"));
    EXPECT_TRUE(j[key].contains("std"));
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "split_0" / "model" / "network.flimnet"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "metrics.txt"));
}

TEST(Classifier, DefaultsAndConfigParsing) {
  const ClassifierConfig c;
  EXPECT_EQ(c.kind, "svm");
  EXPECT_DOUBLE_EQ(c.C, 0.01);
  EXPECT_EQ(c.hidden, (std::vector<int>{4096, 4096}));
  const auto parsed = parse_classifier_config(Json{{"kind", "mlp"}, {"hidden", {16}}, {"epochs", 3}});
  EXPECT_EQ(parsed.kind, "mlp");
  EXPECT_EQ(parsed.train.epochs, 3);
  EXPECT_EQ(parse_classifier_config(classifier_config_to_json(parsed)).hidden, parsed.hidden);
  EXPECT_THROW(parse_classifier_config(Json{{"kind", "forest"}}), ValidationError);
  EXPECT_LT(clamp_perplexity(30.0, 12), 4.0);
  EXPECT_DOUBLE_EQ(clamp_perplexity(5.0, 300), 5.0);
}

TEST(Metrics, TableColumnsFollowTableOne) {
  const auto table = metrics_table({{"FLIM+SVM", Json{{"precision", 0.9}, {"recall", 0.8}, {"f_score", 0.847}}}});
  const auto p = table.find("Precision"), r = table.find("Recall"), f = table.find("F-score");
  ASSERT_NE(p, std::string::npos);
  EXPECT_LT(p, r);
  EXPECT_LT(r, f);
  EXPECT_NE(table.find("FLIM+SVM"), std::string::npos);
}
