#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "elinspect/container.hpp"
#include "elinspect/dataset.hpp"
#include "elinspect/encoding.hpp"
#include "elinspect/eval.hpp"
#include "elinspect/features.hpp"
#include "elinspect/svm.hpp"

namespace elinspect {

struct PipelineSeeds {
  std::uint64_t split = 0;
  std::uint64_t codebook = 0;
  std::uint64_t cv = 0;  // also seeds learning-curve repeats
};

/**
 * Full experiment configuration. Defaults are the strongest fully
 * reproducible variant: dense SIFT on a 60x60 grid, five 32-word codebooks,
 * rho = 0.5, linear SVM with sample weighting.
 */
struct PipelineConfig {
  SamplingStrategy sampling = SamplingStrategy::dense(DenseGridSpec{60, 0.0});
  DescriptorKind descriptor = DescriptorKind::sift;
  int K = 32;
  int m = 5;
  double rho = 0.5;
  SvmKernel kernel = SvmKernel::linear;
  std::vector<double> C_candidates;      // empty selects the default grid
  std::vector<double> gamma_candidates;  // empty selects the default grid (rbf)
  int folds = 5;
  bool use_sample_weights = true;
  bool weighted_test_metrics = false;
  double test_fraction = 0.25;
  double whiten_epsilon = 1e-9;
  // Whitening rank cap: 0 selects the automatic cap of half the training
  // rows (uncapped whitening at rank N-1 maps any training set onto a
  // regular simplex, which blinds the inner cross-validation); a positive
  // value is an absolute cap, a negative value disables the cap.
  std::int64_t whiten_max_rank = 0;
  MiniBatchKMeansParams kmeans{};
  std::int64_t codebook_pool_cap = 400000;
  PipelineSeeds seeds{};

  // Execution knobs; they do not influence results and stay out of the
  // digest.
  unsigned jobs = 1;
  std::filesystem::path feature_cache;
};

/// Rejects illegal parameter combinations (strategy/descriptor pairing,
/// out-of-range values) before any work happens.
void validate(const PipelineConfig& config);

/// Canonical (key, value) rendering of every result-affecting field and
/// seed, in fixed order; the basis of the digest and the run manifest.
std::vector<std::pair<std::string, std::string>> config_kv(const PipelineConfig& config);

/// FNV-1a-64 hex digest over the canonical rendering.
std::string config_digest(const PipelineConfig& config);

/// Applies one key=value setting (config-file and CLI flags funnel through
/// here). Unknown keys are a ConfigError.
void apply_config_kv(PipelineConfig& config, const std::string& key, const std::string& value);

/// Reads a key=value config file ('#' comments, blank lines ignored) on top
/// of `base`.
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

struct PipelineHooks {
  /// Called right before an image file is read, with the active stage name.
  std::function<void(const std::string& stage, const std::filesystem::path& image)> on_image_load;
  /// Stage progress callback.
  std::function<void(const std::string& stage)> on_stage;
};

struct RunArtifact {
  PipelineConfig config;
  std::string digest;
  std::filesystem::path dir;
  VladEncoder encoder;  // the reloaded (serialized-precision) encoder
  SvmKernel kernel = SvmKernel::linear;
  LinearSvmModel linear;
  RbfSvmModel rbf;
  GridSearchResult grid;
  EvalReport report;
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

/**
 * Runs the whole training pipeline on a dataset index: load, stratified
 * split, feature extraction, codebook fitting, encoding, whitening, grid
 * search, final fit, serialization and test-set evaluation. Image paths
 * resolve relative to the index file's directory. Every artifact (encoder
 * and model containers, split manifest, metrics and ROC CSVs, cv table,
 * run manifest) lands in out_dir. Evaluation runs against the *reloaded*
 * containers so the stored report matches what a fresh load reproduces.
 */
RunArtifact run_train(const PipelineConfig& config, const std::filesystem::path& index_file,
                      const std::filesystem::path& out_dir, const PipelineHooks& hooks = {});

struct LoadedArtifact {
  PipelineConfig config;
  std::string digest;
  std::filesystem::path dir;
  VladEncoder encoder;
  SvmKernel kernel = SvmKernel::linear;
  LinearSvmModel linear;
  RbfSvmModel rbf;
};

LoadedArtifact load_artifact(const std::filesystem::path& dir);

struct Prediction {
  std::filesystem::path image;
  double score = 0.0;
  bool defective = false;
  std::string error;  // per-image failures leave the batch running
};

std::vector<Prediction> run_predict(const LoadedArtifact& artifact,
                                    const std::vector<std::filesystem::path>& images,
                                    unsigned jobs = 1, const PipelineHooks& hooks = {});

/// Re-evaluates a stored artifact on the test rows of a split manifest;
/// image paths resolve relative to images_root.
EvalReport run_evaluate(const LoadedArtifact& artifact,
                        const std::filesystem::path& split_manifest,
                        const std::filesystem::path& images_root, unsigned jobs = 1,
                        const PipelineHooks& hooks = {});

struct SweepCell {
  int n = 0;
  bool weighted = false;
  double macro_f1 = 0.0;
  double auc = 0.0;
  double accuracy = 0.0;
  std::string error;  // nonempty when this cell failed; the sweep continues
};

/**
 * Dense-grid sweep: one full pipeline run per grid size (and per weighting
 * variant when sweep_weighting is set). The sweep table is rewritten after
 * every cell so partial results survive failures. A feature cache under
 * out_dir is used when the config does not name one.
 */
std::vector<SweepCell> run_grid_sweep(PipelineConfig base, const std::filesystem::path& index_file,
                                      const std::filesystem::path& out_dir,
                                      const std::vector<int>& n_values, bool sweep_weighting,
                                      const PipelineHooks& hooks = {});

/**
 * Learning-curve experiment on the canonical split: for each fraction and
 * repeat, stratified-subsample the training set (seed = seeds.cv + repeat),
 * retrain the full pipeline on the subset and evaluate on the fixed test
 * set. Returns (fraction, repeat, metric, value) records.
 */
std::vector<LearningCurvePoint> run_learning_curve(PipelineConfig config,
                                                   const std::filesystem::path& index_file,
                                                   const std::filesystem::path& out_dir,
                                                   const std::vector<double>& fractions,
                                                   int repeats, const PipelineHooks& hooks = {});

// Report and table writers (deterministic formatting).
void write_metrics_csv(const std::filesystem::path& path, const EvalReport& report);
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells);
void write_learning_curve_csv(const std::filesystem::path& path,
                              const std::vector<LearningCurvePoint>& points);
void write_cv_table_csv(const std::filesystem::path& path, const GridSearchResult& grid);

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
read_split_manifest(const std::filesystem::path& path);

}  // namespace elinspect
