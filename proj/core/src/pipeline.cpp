#include "elinspect/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elinspect/digest.hpp"
#include "elinspect/errors.hpp"
#include "elinspect/parallel.hpp"
#include "elinspect/rng.hpp"

namespace elinspect {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& vs) {
  std::string out;
  for (double v : vs) {
    if (!out.empty()) out += ',';
    out += fmt(v);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b) {
  Fnv1a h;
  h.update(&a, sizeof(a));
  h.update(&b, sizeof(b));
  return h.value();
}

template <typename Fn>
auto stage(const char* name, const PipelineHooks& hooks, Fn&& fn) {
  if (hooks.on_stage) hooks.on_stage(name);
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("[") + name + "] " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("[") + name + "] " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string("[") + name + "] " + e.what());
  }
}

GrayImage load_image_hooked(const fs::path& path, const char* stage_name,
                            const PipelineHooks& hooks) {
  if (hooks.on_image_load) hooks.on_image_load(stage_name, path);
  return load_png(path);
}

// Dense 15x15 stand-in when a corner detector finds nothing on a
// homogeneous cell.
constexpr int kFallbackGrid = 15;

DescriptorSet extract_with_fallback(const GrayImage& img, const SamplingStrategy& sampling,
                                    DescriptorKind descriptor, bool* used_fallback) {
  DescriptorSet set = extract(img, sampling, descriptor);
  if (used_fallback) *used_fallback = false;
  if (set.rows() == 0 && sampling.kind == SamplingStrategy::Kind::corners) {
    set = extract(img, SamplingStrategy::dense(DenseGridSpec{kFallbackGrid, 0.0}), descriptor);
    if (used_fallback) *used_fallback = true;
  }
  return set;
}

std::uint64_t file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image file: " + path.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.value();
}

// Shared by training, evaluation, the sweep and the learning curve; honors
// the feature cache when the config names one. Fallback extractions are
// never cached so their report notes regenerate deterministically.
DescriptorSet descriptors_for(const fs::path& image, const PipelineConfig& config,
                              const char* stage_name, const PipelineHooks& hooks,
                              bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  if (!config.feature_cache.empty()) {
    Fnv1a key;
    const std::uint64_t img_digest = file_digest(image);
    key.update(&img_digest, sizeof(img_digest));
    key.update(to_string(config.sampling));
    key.update("|");
    key.update(to_string(config.descriptor));
    const fs::path cached = config.feature_cache / (key.hex() + ".feat");
    if (fs::exists(cached)) return read_descriptor_dump(cached);
    const GrayImage img = load_image_hooked(image, stage_name, hooks);
    bool fallback = false;
    DescriptorSet set = extract_with_fallback(img, config.sampling, config.descriptor, &fallback);
    if (used_fallback) *used_fallback = fallback;
    if (!fallback) {
      const fs::path tmp = cached.string() + ".tmp";
      write_descriptor_dump(tmp, set);
      fs::rename(tmp, cached);
    }
    return set;
  }
  const GrayImage img = load_image_hooked(image, stage_name, hooks);
  return extract_with_fallback(img, config.sampling, config.descriptor, used_fallback);
}

struct TrainingMatrices {
  Eigen::MatrixXd X;  // whitened, L2-normalized encodings
  std::vector<int> y_pm;         // +1 defective, -1 functional
  Eigen::VectorXd weights;       // composed sample x class weights
  std::vector<int> y01;
  Eigen::VectorXd sample_weights;  // Table-2 confidence weights only
};

GridSearchSpec grid_spec_for(const PipelineConfig& config, std::size_t train_size) {
  GridSearchSpec spec = config.kernel == SvmKernel::linear
                            ? GridSearchSpec::linear_default(config.seeds.cv)
                            : GridSearchSpec::rbf_default(train_size, config.seeds.cv);
  if (!config.C_candidates.empty()) spec.C_candidates = config.C_candidates;
  if (!config.gamma_candidates.empty() && config.kernel == SvmKernel::rbf)
    spec.gamma_candidates = config.gamma_candidates;
  spec.folds = config.folds;
  return spec;
}

Eigen::VectorXd composed_weights(const std::vector<LabeledSample>& samples,
                                 const ClassWeights& cw, bool use_sample_weights) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double sample_w = use_sample_weights ? samples[i].w : 1.0;
    const double class_w =
        samples[i].y == Label::defective ? cw.defective : cw.functional;
    w[static_cast<Eigen::Index>(i)] = sample_w * class_w;
  }
  return w;
}

struct FittedModel {
  SvmKernel kernel = SvmKernel::linear;
  LinearSvmModel linear;
  RbfSvmModel rbf;
  GridSearchResult grid;
};

FittedModel fit_svm(const TrainingMatrices& tm, const PipelineConfig& config,
                    std::uint64_t cv_seed) {
  FittedModel out;
  out.kernel = config.kernel;
  GridSearchSpec spec = grid_spec_for(config, tm.y_pm.size());
  spec.seed = cv_seed;
  out.grid = grid_search(tm.X, tm.y_pm, tm.weights, spec, config.jobs);
  if (config.kernel == SvmKernel::linear) {
    LinearTrainOptions opts;
    opts.seed = cv_seed;
    out.linear = train_linear(tm.X, tm.y_pm, tm.weights, out.grid.best_C, opts);
  } else {
    out.rbf = train_rbf(tm.X, tm.y_pm, tm.weights, out.grid.best_C, out.grid.best_gamma);
  }
  return out;
}

double score_with(const FittedModel& model, const Eigen::VectorXd& x) {
  return model.kernel == SvmKernel::linear ? decision_value(model.linear, x)
                                           : decision_value(model.rbf, x);
}

// Everything needed to turn a set of labeled samples into SVM-ready
// encodings with a freshly fitted encoder.
struct EncodedTraining {
  VladEncoder encoder;
  TrainingMatrices matrices;
  std::vector<std::string> fallback_notes;
};

EncodedTraining encode_training_set(const std::vector<LabeledSample>& train,
                                    const fs::path& images_root, const PipelineConfig& config,
                                    std::uint64_t codebook_seed, const PipelineHooks& hooks,
                                    const char* stage_name) {
  const std::size_t n = train.size();
  if (n < 2) throw DataError("training set too small");

  // Pass A: per-image descriptor subsample into the codebook pool.
  const auto per_image = static_cast<std::size_t>(
      std::max<std::int64_t>(1, config.codebook_pool_cap / static_cast<std::int64_t>(n)));
  std::vector<Eigen::MatrixXf> pool_blocks(n);
  std::vector<char> fallback_flags(n, 0);
  std::vector<Eigen::VectorXd> pre_rows(n);

  parallel_for(n, config.jobs, [&](std::size_t i) {
    bool fb = false;
    const DescriptorSet set =
        descriptors_for(images_root / train[i].record.image_path, config, stage_name, hooks, &fb);
    fallback_flags[i] = fb ? 1 : 0;
    const auto rows = static_cast<std::size_t>(set.rows());
    const std::size_t take = std::min(per_image, rows);
    Rng rng(mix_seeds(codebook_seed, Fnv1a().update(train[i].record.image_path).value()));
    const auto picks = rng.sample_indices(rows, take);
    Eigen::MatrixXf block(static_cast<Eigen::Index>(take), set.dim());
    for (std::size_t k = 0; k < take; ++k)
      block.row(static_cast<Eigen::Index>(k)) =
          set.descriptors.row(static_cast<Eigen::Index>(picks[k]));
    pool_blocks[i] = std::move(block);
  });

  Eigen::Index pool_rows = 0;
  for (const auto& b : pool_blocks) pool_rows += b.rows();
  if (pool_rows == 0) throw DataError("no descriptors extracted from the training set");
  Eigen::MatrixXf pool(pool_rows, pool_blocks[0].cols());
  Eigen::Index at = 0;
  for (const auto& b : pool_blocks) {
    pool.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  pool_blocks.clear();

  EncodedTraining out;
  out.encoder.rho = config.rho;
  out.encoder.codebooks = fit_codebooks(pool, config.m, config.K, config.kmeans, codebook_seed);
  pool.resize(0, 0);

  // Pass B: pre-whitening encodings (cache hits make this cheap).
  Eigen::MatrixXd pre(static_cast<Eigen::Index>(n), out.encoder.pre_dim());
  parallel_for(n, config.jobs, [&](std::size_t i) {
    const DescriptorSet set =
        descriptors_for(images_root / train[i].record.image_path, config, stage_name, hooks, nullptr);
    pre.row(static_cast<Eigen::Index>(i)) =
        pre_whitening_encoding(set, out.encoder.codebooks, config.rho).transpose();
  });

  const Eigen::Index rank_cap =
      config.whiten_max_rank > 0
          ? static_cast<Eigen::Index>(config.whiten_max_rank)
          : (config.whiten_max_rank == 0 ? std::max<Eigen::Index>(1, static_cast<Eigen::Index>(n) / 2)
                                         : 0);
  out.encoder.whitening = fit_whitener(pre, config.whiten_epsilon, rank_cap);

  const ClassWeights cw = class_weights(train);
  TrainingMatrices& tm = out.matrices;
  tm.X.resize(static_cast<Eigen::Index>(n), out.encoder.output_dim());
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd enc = whiten(out.encoder.whitening, pre.row(static_cast<Eigen::Index>(i)).transpose());
    const double norm = enc.norm();
    if (norm > 0.0) enc /= norm;
    tm.X.row(static_cast<Eigen::Index>(i)) = enc.transpose();
  }
  tm.y_pm.resize(n);
  tm.y01.resize(n);
  tm.sample_weights.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    tm.y_pm[i] = train[i].y == Label::defective ? 1 : -1;
    tm.y01[i] = train[i].y == Label::defective ? 1 : 0;
    tm.sample_weights[static_cast<Eigen::Index>(i)] = train[i].w;
  }
  tm.weights = composed_weights(train, cw, config.use_sample_weights);

  for (std::size_t i = 0; i < n; ++i)
    if (fallback_flags[i])
      out.fallback_notes.push_back("image " + train[i].record.image_path +
                                   ": no corners found, used the dense fallback grid");
  return out;
}

struct TestScores {
  std::vector<double> scores;
  std::vector<int> y01;
  std::vector<Wafer> wafers;
  Eigen::VectorXd sample_weights;
  std::vector<std::string> fallback_notes;
};

TestScores score_test_set(const std::vector<LabeledSample>& test, const fs::path& images_root,
                          const VladEncoder& encoder, const FittedModel& model,
                          const PipelineConfig& config, const PipelineHooks& hooks,
                          const char* stage_name) {
  TestScores out;
  const std::size_t n = test.size();
  out.scores.resize(n);
  out.y01.resize(n);
  out.wafers.resize(n);
  out.sample_weights.resize(static_cast<Eigen::Index>(n));
  std::vector<char> fallback_flags(n, 0);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    bool fb = false;
    const DescriptorSet set =
        descriptors_for(images_root / test[i].record.image_path, config, stage_name, hooks, &fb);
    fallback_flags[i] = fb ? 1 : 0;
    out.scores[i] = score_with(model, encode(set, encoder));
    out.y01[i] = test[i].y == Label::defective ? 1 : 0;
    out.wafers[i] = test[i].record.wafer;
    out.sample_weights[static_cast<Eigen::Index>(i)] = test[i].w;
  });
  for (std::size_t i = 0; i < n; ++i)
    if (fallback_flags[i])
      out.fallback_notes.push_back("image " + test[i].record.image_path +
                                   ": no corners found, used the dense fallback grid");
  return out;
}

void write_group_rows(std::ostream& os, const char* group, const GroupReport& g,
                      const std::string& digest) {
  auto row = [&](const char* metric, double value) {
    os << group << ',' << metric << ',' << fmt(value) << ',' << digest << '\n';
  };
  row("n", static_cast<double>(g.n));
  row("accuracy", g.accuracy);
  row("precision_functional", g.f1.functional.precision);
  row("recall_functional", g.f1.functional.recall);
  row("f1_functional", g.f1.functional.f1);
  row("precision_defective", g.f1.defective.precision);
  row("recall_defective", g.f1.defective.recall);
  row("f1_defective", g.f1.defective.f1);
  row("macro_f1", g.f1.macro_f1);
  row("auc", g.auc);
  row("tn", static_cast<double>(g.cm.counts[0][0]));
  row("fp", static_cast<double>(g.cm.counts[0][1]));
  row("fn", static_cast<double>(g.cm.counts[1][0]));
  row("tp", static_cast<double>(g.cm.counts[1][1]));
}

}  // namespace

void validate(const PipelineConfig& config) {
  if (config.descriptor == DescriptorKind::hog &&
      config.sampling.kind != SamplingStrategy::Kind::whole_image)
    throw ConfigError("hog only pairs with whole-image sampling (got " +
                      to_string(config.sampling) + ")");
  if (config.descriptor == DescriptorKind::sift &&
      config.sampling.kind == SamplingStrategy::Kind::whole_image)
    throw ConfigError("sift requires dense or corner sampling");
  if (config.sampling.kind == SamplingStrategy::Kind::dense && config.sampling.grid.n < 1)
    throw ConfigError("dense grid needs n >= 1");
  if (config.sampling.kind == SamplingStrategy::Kind::corners &&
      (config.sampling.corner_threshold < 1 || config.sampling.corner_threshold > 255))
    throw ConfigError("corner threshold must lie in [1,255]");
  if (config.K < 1) throw ConfigError("codebook size K must be >= 1");
  if (config.m < 1) throw ConfigError("codebook count m must be >= 1");
  if (config.rho <= 0.0 || config.rho > 1.0) throw ConfigError("rho must lie in (0,1]");
  if (config.test_fraction <= 0.0 || config.test_fraction >= 1.0)
    throw ConfigError("test_fraction must lie in (0,1)");
  if (config.folds < 2) throw ConfigError("cross-validation needs >= 2 folds");
  if (config.kmeans.batch_size < 1 || config.kmeans.iterations < 1)
    throw ConfigError("k-means batch size and iterations must be >= 1");
  if (config.codebook_pool_cap < config.m * config.K)
    throw ConfigError("codebook_pool_cap too small for m*K centroids");
}

std::vector<std::pair<std::string, std::string>> config_kv(const PipelineConfig& config) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("sampling", to_string(config.sampling));
  kv.emplace_back("descriptor", to_string(config.descriptor));
  kv.emplace_back("K", std::to_string(config.K));
  kv.emplace_back("m", std::to_string(config.m));
  kv.emplace_back("rho", fmt(config.rho));
  kv.emplace_back("kernel", config.kernel == SvmKernel::linear ? "linear" : "rbf");
  kv.emplace_back("C_candidates", join_doubles(config.C_candidates));
  kv.emplace_back("gamma_candidates", join_doubles(config.gamma_candidates));
  kv.emplace_back("folds", std::to_string(config.folds));
  kv.emplace_back("use_sample_weights", config.use_sample_weights ? "true" : "false");
  kv.emplace_back("weighted_test_metrics", config.weighted_test_metrics ? "true" : "false");
  kv.emplace_back("test_fraction", fmt(config.test_fraction));
  kv.emplace_back("whiten_epsilon", fmt(config.whiten_epsilon));
  kv.emplace_back("whiten_max_rank", std::to_string(config.whiten_max_rank));
  kv.emplace_back("kmeans_batch", std::to_string(config.kmeans.batch_size));
  kv.emplace_back("kmeans_iterations", std::to_string(config.kmeans.iterations));
  kv.emplace_back("codebook_pool_cap", std::to_string(config.codebook_pool_cap));
  kv.emplace_back("seed_split", std::to_string(config.seeds.split));
  kv.emplace_back("seed_codebook", std::to_string(config.seeds.codebook));
  kv.emplace_back("seed_cv", std::to_string(config.seeds.cv));
  return kv;
}

std::string config_digest(const PipelineConfig& config) {
  Fnv1a h;
  for (const auto& [k, v] : config_kv(config)) {
    h.update(k);
    h.update("=");
    h.update(v);
    h.update("\n");
  }
  return h.hex();
}

void apply_config_kv(PipelineConfig& config, const std::string& key, const std::string& value) {
  try {
    if (key == "sampling") {
      config.sampling = sampling_from_string(value);
    } else if (key == "descriptor") {
      config.descriptor = descriptor_from_string(value);
    } else if (key == "K") {
      config.K = std::stoi(value);
    } else if (key == "m") {
      config.m = std::stoi(value);
    } else if (key == "rho") {
      config.rho = std::stod(value);
    } else if (key == "kernel") {
      if (value == "linear")
        config.kernel = SvmKernel::linear;
      else if (value == "rbf")
        config.kernel = SvmKernel::rbf;
      else
        throw ConfigError("unknown kernel '" + value + "'");
    } else if (key == "C_candidates") {
      config.C_candidates = parse_doubles(value);
    } else if (key == "gamma_candidates") {
      config.gamma_candidates = parse_doubles(value);
    } else if (key == "folds") {
      config.folds = std::stoi(value);
    } else if (key == "use_sample_weights") {
      config.use_sample_weights = value == "true" || value == "1";
    } else if (key == "weighted_test_metrics") {
      config.weighted_test_metrics = value == "true" || value == "1";
    } else if (key == "test_fraction") {
      config.test_fraction = std::stod(value);
    } else if (key == "whiten_epsilon") {
      config.whiten_epsilon = std::stod(value);
    } else if (key == "whiten_max_rank") {
      config.whiten_max_rank = std::stoll(value);
    } else if (key == "kmeans_batch") {
      config.kmeans.batch_size = std::stoi(value);
    } else if (key == "kmeans_iterations") {
      config.kmeans.iterations = std::stoi(value);
    } else if (key == "codebook_pool_cap") {
      config.codebook_pool_cap = std::stoll(value);
    } else if (key == "seed_split") {
      config.seeds.split = std::stoull(value);
    } else if (key == "seed_codebook") {
      config.seeds.codebook = std::stoull(value);
    } else if (key == "seed_cv") {
      config.seeds.cv = std::stoull(value);
    } else if (key == "jobs") {
      config.jobs = static_cast<unsigned>(std::stoul(value));
    } else if (key == "feature_cache") {
      config.feature_cache = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
  }
}

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_config_kv(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

RunArtifact run_train(const PipelineConfig& config, const std::filesystem::path& index_file,
                      const std::filesystem::path& out_dir, const PipelineHooks& hooks) {
  validate(config);
  fs::create_directories(out_dir);
  if (!config.feature_cache.empty()) fs::create_directories(config.feature_cache);
  const fs::path images_root = index_file.parent_path();

  RunArtifact artifact;
  artifact.config = config;
  artifact.digest = config_digest(config);
  artifact.dir = out_dir;

  const auto samples = stage("load-index", hooks, [&] {
    return to_labeled(load_index(index_file));
  });

  stage("split", hooks, [&] {
    SplitSpec spec{config.test_fraction, config.seeds.split};
    auto [train, test] = stratified_split(samples, spec);
    artifact.train = std::move(train);
    artifact.test = std::move(test);
    write_split_manifest(out_dir / "split_manifest.csv", artifact.train, artifact.test);
    return 0;
  });

  EncodedTraining enc = stage("fit-encoder", hooks, [&] {
    return encode_training_set(artifact.train, images_root, config, config.seeds.codebook, hooks,
                               "fit-encoder");
  });

  const FittedModel fitted = stage("grid-search", hooks, [&] {
    return fit_svm(enc.matrices, config, config.seeds.cv);
  });
  artifact.grid = fitted.grid;
  artifact.kernel = fitted.kernel;

  FittedModel reloaded = stage("serialize", hooks, [&] {
    to_container(enc.encoder, config.sampling, config.descriptor).write(out_dir / "encoder.elc");
    if (fitted.kernel == SvmKernel::linear)
      to_container(fitted.linear, &fitted.grid).write(out_dir / "model.elc");
    else
      to_container(fitted.rbf, &fitted.grid).write(out_dir / "model.elc");
    // Reload so evaluation (and the stored report) reflect exactly the
    // serialized 32-bit state.
    FittedModel back;
    back.kernel = fitted.kernel;
    back.grid = fitted.grid;
    const Container mc = Container::read(out_dir / "model.elc");
    if (fitted.kernel == SvmKernel::linear)
      back.linear = linear_model_from_container(mc);
    else
      back.rbf = rbf_model_from_container(mc);
    return back;
  });
  artifact.encoder = encoder_from_container(Container::read(out_dir / "encoder.elc"));
  artifact.linear = reloaded.linear;
  artifact.rbf = reloaded.rbf;

  stage("evaluate", hooks, [&] {
    const TestScores ts = score_test_set(artifact.test, images_root, artifact.encoder, reloaded,
                                         config, hooks, "evaluate");
    artifact.report = evaluate_scores(ts.scores, ts.y01, ts.wafers, 0.0,
                                      config.weighted_test_metrics,
                                      config.weighted_test_metrics ? &ts.sample_weights : nullptr);
    for (const auto& note : enc.fallback_notes) artifact.report.notes.push_back(note);
    for (const auto& note : ts.fallback_notes) artifact.report.notes.push_back(note);
    artifact.report.config_digest = artifact.digest;
    artifact.report.metadata["seed_split"] = std::to_string(config.seeds.split);
    artifact.report.metadata["seed_codebook"] = std::to_string(config.seeds.codebook);
    artifact.report.metadata["seed_cv"] = std::to_string(config.seeds.cv);
    artifact.report.metadata["train_size"] = std::to_string(artifact.train.size());
    artifact.report.metadata["test_size"] = std::to_string(artifact.test.size());
    artifact.report.metadata["best_C"] = fmt(artifact.grid.best_C);
    if (config.kernel == SvmKernel::rbf)
      artifact.report.metadata["best_gamma"] = fmt(artifact.grid.best_gamma);
    return 0;
  });

  stage("write-reports", hooks, [&] {
    write_metrics_csv(out_dir / "metrics.csv", artifact.report);
    write_cv_table_csv(out_dir / "cv_table.csv", artifact.grid);
    write_roc_csv(out_dir / "roc_combined.csv", artifact.report.combined.roc);
    if (artifact.report.mono) write_roc_csv(out_dir / "roc_mono.csv", artifact.report.mono->roc);
    if (artifact.report.poly) write_roc_csv(out_dir / "roc_poly.csv", artifact.report.poly->roc);
    std::ostringstream manifest;
    manifest << "# elinspect run manifest v1\n";
    manifest << "digest = " << artifact.digest << '\n';
    for (const auto& [k, v] : config_kv(config)) manifest << k << " = " << v << '\n';
    std::ofstream out(out_dir / "run_manifest.txt", std::ios::binary);
    if (!out) throw DataError("cannot write run manifest");
    out << manifest.str();
    return 0;
  });

  return artifact;
}

LoadedArtifact load_artifact(const std::filesystem::path& dir) {
  LoadedArtifact art;
  art.dir = dir;
  PipelineConfig config;

  std::ifstream in(dir / "run_manifest.txt");
  if (!in) throw DataError("missing run manifest in " + dir.string());
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "digest")
      art.digest = value;
    else
      apply_config_kv(config, key, value);
  }

  SamplingStrategy sampling;
  DescriptorKind descriptor;
  art.encoder = encoder_from_container(Container::read(dir / "encoder.elc"), &sampling, &descriptor);
  config.sampling = sampling;
  config.descriptor = descriptor;

  const Container mc = Container::read(dir / "model.elc");
  if (mc.kind == "linear_svm") {
    art.kernel = SvmKernel::linear;
    art.linear = linear_model_from_container(mc);
    config.kernel = SvmKernel::linear;
  } else {
    art.kernel = SvmKernel::rbf;
    art.rbf = rbf_model_from_container(mc);
    config.kernel = SvmKernel::rbf;
  }
  art.config = config;
  return art;
}

std::vector<Prediction> run_predict(const LoadedArtifact& artifact,
                                    const std::vector<std::filesystem::path>& images,
                                    unsigned jobs, const PipelineHooks& hooks) {
  std::vector<Prediction> out(images.size());
  PipelineConfig config = artifact.config;
  config.feature_cache.clear();  // score fresh images, no cache assumptions
  parallel_for(images.size(), jobs, [&](std::size_t i) {
    Prediction& p = out[i];
    p.image = images[i];
    try {
      const GrayImage img = load_image_hooked(images[i], "predict", hooks);
      const DescriptorSet set =
          extract_with_fallback(img, config.sampling, config.descriptor, nullptr);
      const Eigen::VectorXd enc = encode(set, artifact.encoder);
      p.score = artifact.kernel == SvmKernel::linear ? decision_value(artifact.linear, enc)
                                                     : decision_value(artifact.rbf, enc);
      p.defective = p.score > 0.0;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });
  return out;
}

EvalReport run_evaluate(const LoadedArtifact& artifact, const std::filesystem::path& split_manifest,
                        const std::filesystem::path& images_root, unsigned jobs,
                        const PipelineHooks& hooks) {
  auto [train, test] = read_split_manifest(split_manifest);
  (void)train;
  if (test.empty()) throw DataError("split manifest holds no test rows");
  PipelineConfig config = artifact.config;
  config.jobs = jobs;
  FittedModel model;
  model.kernel = artifact.kernel;
  model.linear = artifact.linear;
  model.rbf = artifact.rbf;
  const TestScores ts =
      score_test_set(test, images_root, artifact.encoder, model, config, hooks, "evaluate");
  EvalReport report = evaluate_scores(ts.scores, ts.y01, ts.wafers, 0.0,
                                      config.weighted_test_metrics,
                                      config.weighted_test_metrics ? &ts.sample_weights : nullptr);
  for (const auto& note : ts.fallback_notes) report.notes.push_back(note);
  report.config_digest = artifact.digest;
  return report;
}

std::vector<SweepCell> run_grid_sweep(PipelineConfig base, const std::filesystem::path& index_file,
                                      const std::filesystem::path& out_dir,
                                      const std::vector<int>& n_values, bool sweep_weighting,
                                      const PipelineHooks& hooks) {
  if (n_values.empty()) throw ConfigError("grid sweep needs at least one n value");
  fs::create_directories(out_dir);
  if (base.feature_cache.empty()) base.feature_cache = out_dir / "feature_cache";

  std::vector<SweepCell> cells;
  for (int n : n_values) {
    for (int weighted = sweep_weighting ? 0 : (base.use_sample_weights ? 1 : 0); weighted <= 1;
         ++weighted) {
      SweepCell cell;
      cell.n = n;
      cell.weighted = weighted == 1;
      PipelineConfig config = base;
      config.sampling = SamplingStrategy::dense(DenseGridSpec{n, 0.0});
      config.use_sample_weights = cell.weighted;
      char name[32];
      std::snprintf(name, sizeof(name), "n%02d_w%d", n, weighted);
      try {
        const RunArtifact art = run_train(config, index_file, out_dir / name, hooks);
        cell.macro_f1 = art.report.combined.f1.macro_f1;
        cell.auc = art.report.combined.auc;
        cell.accuracy = art.report.combined.accuracy;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cells.push_back(cell);
      write_sweep_csv(out_dir / "sweep.csv", cells);  // partial tables survive
      if (!sweep_weighting) break;
    }
  }
  return cells;
}

std::vector<LearningCurvePoint> run_learning_curve(PipelineConfig config,
                                                   const std::filesystem::path& index_file,
                                                   const std::filesystem::path& out_dir,
                                                   const std::vector<double>& fractions,
                                                   int repeats, const PipelineHooks& hooks) {
  validate(config);
  fs::create_directories(out_dir);
  if (config.feature_cache.empty()) config.feature_cache = out_dir / "feature_cache";
  fs::create_directories(config.feature_cache);
  const fs::path images_root = index_file.parent_path();

  const auto samples = to_labeled(load_index(index_file));
  auto [train, test] = stratified_split(samples, SplitSpec{config.test_fraction, config.seeds.split});

  RetrainFn retrain = [&](const std::vector<LabeledSample>& subset,
                          std::uint64_t seed) -> std::map<std::string, double> {
    const std::uint64_t codebook_seed = mix_seeds(config.seeds.codebook, seed);
    const std::uint64_t cv_seed = mix_seeds(config.seeds.cv, seed);
    EncodedTraining enc =
        encode_training_set(subset, images_root, config, codebook_seed, hooks, "learning-curve");
    const FittedModel fitted = fit_svm(enc.matrices, config, cv_seed);
    const TestScores ts =
        score_test_set(test, images_root, enc.encoder, fitted, config, hooks, "learning-curve");
    const EvalReport report = evaluate_scores(ts.scores, ts.y01, ts.wafers);
    return {{"macro_f1", report.combined.f1.macro_f1},
            {"auc", report.combined.auc},
            {"accuracy", report.combined.accuracy}};
  };

  const auto points = learning_curve(train, fractions, repeats, config.seeds.cv, retrain);
  write_learning_curve_csv(out_dir / "learning_curve.csv", points);
  return points;
}

void write_metrics_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write metrics csv: " + path.string());
  os << "group,metric,value,digest\n";
  if (report.mono) write_group_rows(os, "mono", *report.mono, report.config_digest);
  if (report.poly) write_group_rows(os, "poly", *report.poly, report.config_digest);
  write_group_rows(os, "combined", report.combined, report.config_digest);
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write roc csv: " + path.string());
  os << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.fpr.size(); ++i)
    os << fmt(curve.thresholds[i]) << ',' << fmt(curve.fpr[i]) << ',' << fmt(curve.tpr[i]) << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write sweep csv: " + path.string());
  os << "n,weighted,macro_f1,auc,accuracy,error\n";
  for (const auto& c : cells)
    os << c.n << ',' << (c.weighted ? 1 : 0) << ',' << fmt(c.macro_f1) << ',' << fmt(c.auc) << ','
       << fmt(c.accuracy) << ',' << c.error << '\n';
}

void write_learning_curve_csv(const std::filesystem::path& path,
                              const std::vector<LearningCurvePoint>& points) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write learning-curve csv: " + path.string());
  os << "fraction,repeat,metric,value\n";
  for (const auto& p : points)
    os << fmt(p.fraction) << ',' << p.repeat << ',' << p.metric << ',' << fmt(p.value) << '\n';
}

void write_cv_table_csv(const std::filesystem::path& path, const GridSearchResult& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write cv table: " + path.string());
  os << "C,gamma,mean_score";
  const std::size_t folds = grid.table.empty() ? 0 : grid.table[0].fold_scores.size();
  for (std::size_t f = 0; f < folds; ++f) os << ",fold" << f;
  os << '\n';
  for (const auto& cell : grid.table) {
    os << fmt(cell.C) << ',' << fmt(cell.gamma) << ',' << fmt(cell.mean_score);
    for (double s : cell.fold_scores) os << ',' << fmt(s);
    os << '\n';
  }
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>>
read_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split manifest: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("path,p,wafer,assignment", 0) != 0)
    throw DataError("not a split manifest: " + path.string());
  std::vector<LabeledSample> train, test;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream is(line);
    std::string pathf, pf, waferf, assignf;
    if (!std::getline(is, pathf, ',') || !std::getline(is, pf, ',') ||
        !std::getline(is, waferf, ',') || !std::getline(is, assignf))
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed manifest row");
    CellRecord rec;
    rec.image_path = pathf;
    const double raw = std::stod(pf);
    double best = 0.0, best_dist = std::abs(raw);
    for (double legal : {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}) {
      if (std::abs(raw - legal) < best_dist) {
        best_dist = std::abs(raw - legal);
        best = legal;
      }
    }
    rec.p = best;
    if (waferf == "mono")
      rec.wafer = Wafer::mono;
    else if (waferf == "poly")
      rec.wafer = Wafer::poly;
    else
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown wafer type");
    if (assignf == "train")
      train.push_back(to_labeled(rec));
    else if (assignf == "test")
      test.push_back(to_labeled(rec));
    else
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown assignment");
  }
  return {std::move(train), std::move(test)};
}

}  // namespace elinspect
