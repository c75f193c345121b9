#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>

#include "elinspect/errors.hpp"
#include "elinspect/pipeline.hpp"
#include "elinspect/svg.hpp"
#include "support/synth.hpp"

using namespace elinspect;
using elinspect::test::make_synthetic_dataset;
using elinspect::test::unique_temp_dir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

PipelineConfig tiny_config() {
  PipelineConfig config;
  config.sampling = SamplingStrategy::dense(DenseGridSpec{8, 0.0});
  config.descriptor = DescriptorKind::sift;
  config.K = 4;
  config.m = 2;
  config.kmeans = MiniBatchKMeansParams{256, 40};
  config.codebook_pool_cap = 4000;
  config.C_candidates = {0.1, 10.0};
  config.folds = 3;
  config.jobs = 2;
  return config;
}

}  // namespace

TEST_CASE("config digest, kv round-trip and validation") {
  PipelineConfig config = tiny_config();
  const std::string digest = config_digest(config);
  CHECK(digest.size() == 16);

  PipelineConfig copy;
  for (const auto& [k, v] : config_kv(config)) apply_config_kv(copy, k, v);
  CHECK(config_digest(copy) == digest);

  PipelineConfig other = config;
  other.seeds.split = 99;
  CHECK(config_digest(other) != digest);

  CHECK_THROWS_AS(apply_config_kv(copy, "nonsense_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_config_kv(copy, "K", "not_a_number"), ConfigError);

  PipelineConfig bad = config;
  bad.sampling = SamplingStrategy::corners(5);
  bad.descriptor = DescriptorKind::hog;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad.sampling = SamplingStrategy::dense(DenseGridSpec{10, 0.0});
  CHECK_THROWS_AS(validate(bad), ConfigError);  // dense+hog is illegal too
  bad.sampling = SamplingStrategy::whole_image();
  CHECK_NOTHROW(validate(bad));
}

TEST_CASE("config files load with comments, overrides and errors") {
  const auto dir = unique_temp_dir("config");
  std::ofstream(dir / "run.conf") << "# comment\n"
                                     "sampling = dense:12:0\n"
                                     "K = 8\n"
                                     "use_sample_weights = false\n"
                                     "seed_cv = 42\n";
  const PipelineConfig config = load_config_file(dir / "run.conf");
  CHECK(config.sampling.grid.n == 12);
  CHECK(config.K == 8);
  CHECK_FALSE(config.use_sample_weights);
  CHECK(config.seeds.cv == 42);

  std::ofstream(dir / "bad.conf") << "K 8\n";
  CHECK_THROWS_AS(load_config_file(dir / "bad.conf"), ConfigError);
}

TEST_CASE("full pipeline on a synthetic dataset") {
  const auto dir = unique_temp_dir("pipeline");
  const auto ds = make_synthetic_dataset(dir / "data", 72, 11, 64);
  const PipelineConfig config = tiny_config();

  // Leakage instrumentation: record the stage of every image read.
  std::mutex mu;
  std::vector<std::pair<std::string, std::string>> loads;
  PipelineHooks hooks;
  hooks.on_image_load = [&](const std::string& stage, const std::filesystem::path& image) {
    std::lock_guard<std::mutex> lock(mu);
    loads.emplace_back(stage, image.filename().string());
  };

  const RunArtifact art = run_train(config, ds.index, dir / "run", hooks);

  SUBCASE("artifact files exist and the report covers both groups") {
    for (const char* name : {"encoder.elc", "model.elc", "split_manifest.csv", "metrics.csv",
                             "roc_combined.csv", "cv_table.csv", "run_manifest.txt"})
      CHECK(std::filesystem::exists(dir / "run" / name));
    CHECK(art.train.size() == 54);
    CHECK(art.test.size() == 18);
    REQUIRE(art.report.mono.has_value());
    REQUIRE(art.report.poly.has_value());
    CHECK(art.report.combined.n == 18);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        CHECK(art.report.combined.cm.counts[r][c] ==
              art.report.mono->cm.counts[r][c] + art.report.poly->cm.counts[r][c]);
    // The synthetic defects are visually obvious; the pipeline must learn them.
    CHECK(art.report.combined.f1.macro_f1 > 0.6);
    CHECK(art.report.combined.auc > 0.7);
  }

  SUBCASE("no test image is read before the evaluate stage") {
    std::set<std::string> test_files;
    for (const auto& s : art.test)
      test_files.insert(std::filesystem::path(s.record.image_path).filename().string());
    REQUIRE_FALSE(loads.empty());
    bool saw_test_loads = false;
    for (const auto& [stage, file] : loads)
      if (test_files.count(file)) {
        saw_test_loads = true;
        CHECK(stage == "evaluate");
      }
    CHECK(saw_test_loads);
  }

  SUBCASE("reruns with identical seeds are byte-identical") {
    const RunArtifact art2 = run_train(config, ds.index, dir / "run2", {});
    CHECK(art2.digest == art.digest);
    CHECK(slurp(dir / "run" / "metrics.csv") == slurp(dir / "run2" / "metrics.csv"));
    CHECK(slurp(dir / "run" / "encoder.elc") == slurp(dir / "run2" / "encoder.elc"));
    CHECK(slurp(dir / "run" / "model.elc") == slurp(dir / "run2" / "model.elc"));
    CHECK(slurp(dir / "run" / "split_manifest.csv") == slurp(dir / "run2" / "split_manifest.csv"));
  }

  SUBCASE("run_evaluate on the reloaded artifact reproduces the stored report") {
    const LoadedArtifact loaded = load_artifact(dir / "run");
    CHECK(loaded.digest == art.digest);
    CHECK(loaded.config.sampling.grid.n == 8);
    const EvalReport again =
        run_evaluate(loaded, dir / "run" / "split_manifest.csv", ds.dir, 2);
    CHECK(again.combined.f1.macro_f1 == art.report.combined.f1.macro_f1);
    CHECK(again.combined.auc == art.report.combined.auc);
    CHECK(again.combined.accuracy == art.report.combined.accuracy);
    CHECK(again.combined.cm.counts == art.report.combined.cm.counts);
  }

  SUBCASE("predict scores are deterministic and failures do not kill the batch") {
    const LoadedArtifact loaded = load_artifact(dir / "run");
    // A defective training image, the same image twice, and a broken file.
    std::filesystem::path defective_train;
    for (const auto& s : art.train)
      if (s.record.p == 1.0) defective_train = ds.dir / s.record.image_path;
    REQUIRE_FALSE(defective_train.empty());
    const auto broken = dir / "broken.png";
    std::ofstream(broken) << "this is not a png";

    const auto preds = run_predict(loaded, {defective_train, broken, defective_train}, 2);
    REQUIRE(preds.size() == 3);
    CHECK(preds[0].error.empty());
    CHECK(preds[2].error.empty());
    CHECK(preds[0].score == preds[2].score);
    CHECK_FALSE(preds[1].error.empty());
    CHECK(preds[0].defective == (preds[0].score > 0.0));
  }

  SUBCASE("metrics csv carries the digest on every row") {
    const std::string metrics = slurp(dir / "run" / "metrics.csv");
    std::size_t rows = 0, tagged = 0;
    std::istringstream is(metrics);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      ++rows;
      if (line.find(art.digest) != std::string::npos) ++tagged;
    }
    CHECK(rows == tagged);
    CHECK(rows == 3 * 14);  // three groups, fourteen metrics each
  }
}

TEST_CASE("run_train rejects an illegal pairing before any work") {
  PipelineConfig config = tiny_config();
  config.sampling = SamplingStrategy::corners(5);
  config.descriptor = DescriptorKind::hog;
  bool touched = false;
  PipelineHooks hooks;
  hooks.on_image_load = [&](const std::string&, const std::filesystem::path&) { touched = true; };
  CHECK_THROWS_AS(run_train(config, "/nonexistent/labels.csv", unique_temp_dir("reject"), hooks),
                  ConfigError);
  CHECK_FALSE(touched);
}

TEST_CASE("feature cache round-trips and reuses descriptor dumps") {
  const auto dir = unique_temp_dir("cache");
  const auto ds = make_synthetic_dataset(dir / "data", 48, 3, 64);
  PipelineConfig config = tiny_config();
  config.feature_cache = dir / "fc";

  const RunArtifact a = run_train(config, ds.index, dir / "runA", {});
  CHECK(std::filesystem::exists(dir / "fc"));
  std::size_t cached = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "fc"))
    if (e.path().extension() == ".feat") ++cached;
  CHECK(cached == 48);  // every image extracted exactly once

  // Second run consumes the cache and must produce identical artifacts.
  const RunArtifact b = run_train(config, ds.index, dir / "runB", {});
  CHECK(slurp(dir / "runA" / "metrics.csv") == slurp(dir / "runB" / "metrics.csv"));
  CHECK(slurp(dir / "runA" / "model.elc") == slurp(dir / "runB" / "model.elc"));
}

TEST_CASE("corner sampling falls back to a dense grid on blank cells") {
  const auto dir = unique_temp_dir("fallback");
  // Mostly textured dataset plus a few structureless cells the detector
  // cannot fire on.
  const auto ds = make_synthetic_dataset(dir / "data", 48, 21, 64);
  int blanked = 0;
  for (const auto& rec : ds.records) {
    if (rec.p == 0.0 && blanked < 6) {
      save_png8(make_image(64, 64, 0.55f), dir / "data" / rec.image_path);
      ++blanked;
    }
  }
  REQUIRE(blanked == 6);

  PipelineConfig config = tiny_config();
  config.sampling = SamplingStrategy::corners(5);
  const RunArtifact art = run_train(config, ds.index, dir / "run", {});
  int fallback_notes = 0;
  for (const auto& note : art.report.notes)
    if (note.find("dense fallback grid") != std::string::npos) ++fallback_notes;
  CHECK(fallback_notes == blanked);

  // Reruns regenerate the very same notes (fallbacks are never cached).
  PipelineConfig cached = config;
  cached.feature_cache = dir / "fc";
  const RunArtifact a = run_train(cached, ds.index, dir / "runA", {});
  const RunArtifact b = run_train(cached, ds.index, dir / "runB", {});
  CHECK(a.report.notes == b.report.notes);
  CHECK(slurp(dir / "runA" / "metrics.csv") == slurp(dir / "runB" / "metrics.csv"));
}

TEST_CASE("grid sweep records per-cell errors and keeps going") {
  const auto dir = unique_temp_dir("sweep-err");
  const auto ds = make_synthetic_dataset(dir / "data", 48, 9, 64);
  PipelineConfig config = tiny_config();
  config.folds = 2;
  // n=70 exceeds the 64px synthetic cells, so that cell must fail while
  // n=8 succeeds.
  const auto cells = run_grid_sweep(config, ds.index, dir / "sweep", {8, 70}, false, {});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].error.empty());
  CHECK_FALSE(cells[1].error.empty());
  CHECK(std::filesystem::exists(dir / "sweep" / "sweep.csv"));
  const std::string csv = slurp(dir / "sweep" / "sweep.csv");
  CHECK(csv.find("finer than the image") != std::string::npos);
}

TEST_CASE("grid sweep emits one cell per configuration and a csv") {
  const auto dir = unique_temp_dir("sweep");
  const auto ds = make_synthetic_dataset(dir / "data", 48, 5, 64);
  PipelineConfig config = tiny_config();
  config.folds = 2;

  const auto cells = run_grid_sweep(config, ds.index, dir / "sweep", {6, 10}, true, {});
  REQUIRE(cells.size() == 4);
  for (const auto& cell : cells) {
    CHECK(cell.error.empty());
    CHECK(cell.macro_f1 >= 0.0);
    CHECK(cell.macro_f1 <= 1.0);
  }
  CHECK(cells[0].n == 6);
  CHECK_FALSE(cells[0].weighted);
  CHECK(cells[1].weighted);
  CHECK(cells[2].n == 10);
  CHECK(std::filesystem::exists(dir / "sweep" / "sweep.csv"));

  const std::string csv = slurp(dir / "sweep" / "sweep.csv");
  CHECK(csv.rfind("n,weighted,macro_f1,auc,accuracy,error", 0) == 0);
}

TEST_CASE("learning curve runs the full retrain per fraction and repeat") {
  const auto dir = unique_temp_dir("lc");
  const auto ds = make_synthetic_dataset(dir / "data", 64, 7, 64);
  PipelineConfig config = tiny_config();
  config.folds = 2;

  const auto points = run_learning_curve(config, ds.index, dir / "out", {0.5, 1.0}, 2, {});
  REQUIRE(points.size() == 2 * 2 * 3);  // fractions x repeats x metrics
  CHECK(std::filesystem::exists(dir / "out" / "learning_curve.csv"));
  std::set<std::string> metrics;
  for (const auto& p : points) metrics.insert(p.metric);
  CHECK(metrics == std::set<std::string>{"accuracy", "auc", "macro_f1"});

  // Deterministic: a second run reproduces every record.
  const auto again = run_learning_curve(config, ds.index, dir / "out2", {0.5, 1.0}, 2, {});
  REQUIRE(again.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(again[i].fraction == points[i].fraction);
    CHECK(again[i].metric == points[i].metric);
    CHECK(again[i].value == points[i].value);
  }
}

TEST_CASE("svg plots render from eval structures") {
  RocCurve curve;
  curve.thresholds = {std::numeric_limits<double>::infinity(), 0.8, 0.2};
  curve.fpr = {0.0, 0.25, 1.0};
  curve.tpr = {0.0, 0.75, 1.0};
  const std::string svg = roc_svg({{"test", curve}}, "demo");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("demo") != std::string::npos);

  BoxplotStats stats;
  stats.median = 0.5;
  stats.q1 = 0.4;
  stats.q3 = 0.6;
  stats.whisker_low = 0.3;
  stats.whisker_high = 0.7;
  stats.outliers = {0.1};
  const std::string box = boxplot_svg({{"25%", stats}, {"50%", stats}}, "curve", "macro_f1");
  CHECK(box.find("<rect") != std::string::npos);
  CHECK(box.find("circle") != std::string::npos);
}
