// Command-line front end for the EL cell classification pipeline:
// split / train / evaluate / predict / sweep-grid / learning-curve / plot.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "elinspect/errors.hpp"
#include "elinspect/eval.hpp"
#include "elinspect/pipeline.hpp"
#include "elinspect/svg.hpp"

namespace fs = std::filesystem;
using namespace elinspect;

namespace {

struct ConfigCli {
  std::string config_file;
  std::vector<std::string> sets;  // key=value overrides, applied after the file
  std::string sampling, descriptor, kernel;
  int K = -1, m = -1, folds = -1;
  double rho = -1.0, test_fraction = -1.0;
  int weights_flag = -1;  // tri-state: unset/-1, off/0, on/1
  std::uint64_t seed_split = 0, seed_codebook = 0, seed_cv = 0;
  bool seed_split_set = false, seed_codebook_set = false, seed_cv_set = false;
  unsigned jobs = 0;
  std::string feature_cache;
};

void add_config_flags(CLI::App* cmd, ConfigCli& c) {
  cmd->add_option("--config", c.config_file, "key = value config file");
  cmd->add_option("--set", c.sets, "extra key=value overrides (repeatable; flags win)");
  cmd->add_option("--sampling", c.sampling, "dense:N[:patch], corners:T[:patch] or whole");
  cmd->add_option("--descriptor", c.descriptor, "sift or hog");
  cmd->add_option("--kernel", c.kernel, "linear or rbf");
  cmd->add_option("--codebook-size,-K", c.K, "VLAD codebook size K");
  cmd->add_option("--codebooks,-m", c.m, "number of codebooks m");
  cmd->add_option("--rho", c.rho, "power-normalization exponent");
  cmd->add_option("--folds", c.folds, "inner cross-validation folds");
  cmd->add_option("--test-fraction", c.test_fraction, "held-out test fraction");
  cmd->add_flag("--weights{1},--no-weights{0}", c.weights_flag, "rater-confidence sample weighting");
  cmd->add_option("--seed-split", c.seed_split, "split seed")->each([&](const std::string&) { c.seed_split_set = true; });
  cmd->add_option("--seed-codebook", c.seed_codebook, "codebook seed")->each([&](const std::string&) { c.seed_codebook_set = true; });
  cmd->add_option("--seed-cv", c.seed_cv, "cross-validation seed")->each([&](const std::string&) { c.seed_cv_set = true; });
  cmd->add_option("--jobs,-j", c.jobs, "worker threads");
  cmd->add_option("--feature-cache", c.feature_cache, "descriptor cache directory");
}

PipelineConfig build_config(const ConfigCli& c) {
  PipelineConfig config;
  if (!c.config_file.empty()) config = load_config_file(c.config_file, config);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_config_kv(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.sampling.empty()) config.sampling = sampling_from_string(c.sampling);
  if (!c.descriptor.empty()) config.descriptor = descriptor_from_string(c.descriptor);
  if (!c.kernel.empty()) apply_config_kv(config, "kernel", c.kernel);
  if (c.K > 0) config.K = c.K;
  if (c.m > 0) config.m = c.m;
  if (c.rho > 0.0) config.rho = c.rho;
  if (c.folds > 0) config.folds = c.folds;
  if (c.test_fraction > 0.0) config.test_fraction = c.test_fraction;
  if (c.weights_flag >= 0) config.use_sample_weights = c.weights_flag == 1;
  if (c.seed_split_set) config.seeds.split = c.seed_split;
  if (c.seed_codebook_set) config.seeds.codebook = c.seed_codebook;
  if (c.seed_cv_set) config.seeds.cv = c.seed_cv;
  if (c.jobs > 0) config.jobs = c.jobs;
  if (!c.feature_cache.empty()) config.feature_cache = c.feature_cache;
  return config;
}

PipelineHooks progress_hooks(bool verbose) {
  PipelineHooks hooks;
  if (verbose)
    hooks.on_stage = [](const std::string& s) { std::cerr << "[stage] " << s << '\n'; };
  return hooks;
}

void print_report(const EvalReport& report) {
  auto line = [](const char* name, const GroupReport& g) {
    std::printf("%-9s n=%-5lld acc=%.4f macroF1=%.4f auc=%.4f  [tn=%lld fp=%lld fn=%lld tp=%lld]\n",
                name, static_cast<long long>(g.n), g.accuracy, g.f1.macro_f1, g.auc,
                static_cast<long long>(g.cm.counts[0][0]), static_cast<long long>(g.cm.counts[0][1]),
                static_cast<long long>(g.cm.counts[1][0]), static_cast<long long>(g.cm.counts[1][1]));
  };
  if (report.mono) line("mono", *report.mono);
  if (report.poly) line("poly", *report.poly);
  line("combined", report.combined);
  for (const auto& note : report.notes) std::printf("note: %s\n", note.c_str());
}

std::vector<double> parse_fraction_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

std::vector<int> parse_n_range(const std::string& text) {
  // "5:75:5" or comma list "5,60".
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    int lo = 0, hi = 0, step = 5;
    if (std::sscanf(text.c_str(), "%d:%d:%d", &lo, &hi, &step) < 2 || step <= 0)
      throw ConfigError("bad n range '" + text + "' (expected lo:hi[:step])");
    for (int n = lo; n <= hi; n += step) out.push_back(n);
  } else {
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw ConfigError("empty n list");
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"EL solar-cell defect classification pipeline"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print stage progress");

  // --- split ---------------------------------------------------------------
  auto* split_cmd = app.add_subcommand("split", "write the canonical split manifest");
  split_cmd->fallthrough();
  std::string split_index, split_out = "split_manifest.csv";
  double split_fraction = 0.25;
  std::uint64_t split_seed = 0;
  split_cmd->add_option("--index", split_index, "dataset index file")->required();
  split_cmd->add_option("--out", split_out, "manifest path");
  split_cmd->add_option("--test-fraction", split_fraction, "held-out fraction");
  split_cmd->add_option("--seed-split", split_seed, "split seed");

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train and evaluate the full pipeline");
  train_cmd->fallthrough();
  std::string train_index, train_out = "run";
  ConfigCli train_cfg;
  train_cmd->add_option("--index", train_index, "dataset index file")->required();
  train_cmd->add_option("--out", train_out, "artifact output directory");
  add_config_flags(train_cmd, train_cfg);

  // --- evaluate ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "re-evaluate a stored artifact");
  eval_cmd->fallthrough();
  std::string eval_artifact, eval_images, eval_manifest, eval_metrics_out;
  unsigned eval_jobs = 1;
  eval_cmd->add_option("--artifact", eval_artifact, "artifact directory")->required();
  eval_cmd->add_option("--images-root", eval_images, "directory image paths resolve against")->required();
  eval_cmd->add_option("--split", eval_manifest, "split manifest (defaults to the artifact's)");
  eval_cmd->add_option("--out", eval_metrics_out, "also write metrics CSV here");
  eval_cmd->add_option("--jobs,-j", eval_jobs, "worker threads");

  // --- predict ---------------------------------------------------------------
  auto* predict_cmd = app.add_subcommand("predict", "score single cell images");
  predict_cmd->fallthrough();
  std::string predict_artifact, predict_list, predict_out;
  std::vector<std::string> predict_images;
  unsigned predict_jobs = 1;
  predict_cmd->add_option("--artifact", predict_artifact, "artifact directory")->required();
  predict_cmd->add_option("--list", predict_list, "file with one image path per line");
  predict_cmd->add_option("--out", predict_out, "write predictions CSV here");
  predict_cmd->add_option("--jobs,-j", predict_jobs, "worker threads");
  predict_cmd->add_option("images", predict_images, "image files");

  // --- sweep-grid ------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep-grid", "dense-grid size sweep");
  sweep_cmd->fallthrough();
  std::string sweep_index, sweep_out = "sweep", sweep_ns = "5:75:5";
  bool sweep_weighting = false;
  ConfigCli sweep_cfg;
  sweep_cmd->add_option("--index", sweep_index, "dataset index file")->required();
  sweep_cmd->add_option("--out", sweep_out, "sweep output directory");
  sweep_cmd->add_option("--n-values", sweep_ns, "grid sizes, lo:hi[:step] or comma list");
  sweep_cmd->add_flag("--sweep-weighting", sweep_weighting, "run each size with and without sample weights");
  add_config_flags(sweep_cmd, sweep_cfg);

  // --- learning-curve --------------------------------------------------------
  auto* lc_cmd = app.add_subcommand("learning-curve", "training-subset learning curve");
  lc_cmd->fallthrough();
  std::string lc_index, lc_out = "learning_curve", lc_fractions = "0.25,0.5,0.75";
  int lc_repeats = 50;
  ConfigCli lc_cfg;
  lc_cmd->add_option("--index", lc_index, "dataset index file")->required();
  lc_cmd->add_option("--out", lc_out, "output directory");
  lc_cmd->add_option("--fractions", lc_fractions, "comma list of training fractions");
  lc_cmd->add_option("--repeats", lc_repeats, "repeats per fraction");
  add_config_flags(lc_cmd, lc_cfg);

  // --- plot -------------------------------------------------------------------
  auto* plot_cmd = app.add_subcommand("plot", "render CSV reports as SVG");
  plot_cmd->fallthrough();
  std::string plot_roc, plot_lc, plot_metric = "macro_f1", plot_out = "plot.svg", plot_title;
  plot_cmd->add_option("--roc", plot_roc, "ROC csv (threshold,fpr,tpr); repeatable via commas");
  plot_cmd->add_option("--learning-curve", plot_lc, "learning-curve csv");
  plot_cmd->add_option("--metric", plot_metric, "metric to box-plot from the learning curve");
  plot_cmd->add_option("--out", plot_out, "output SVG path");
  plot_cmd->add_option("--title", plot_title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors exit 1; --help exits 0
  }
  const PipelineHooks hooks = progress_hooks(verbose);

  if (split_cmd->parsed()) {
    const auto samples = to_labeled(load_index(split_index));
    auto [train, test] = stratified_split(samples, SplitSpec{split_fraction, split_seed});
    write_split_manifest(split_out, train, test);
    std::printf("wrote %s: %zu train / %zu test\n", split_out.c_str(), train.size(), test.size());
    return 0;
  }

  if (train_cmd->parsed()) {
    const PipelineConfig config = build_config(train_cfg);
    const RunArtifact art = run_train(config, train_index, train_out, hooks);
    std::printf("artifact %s (digest %s)\n", train_out.c_str(), art.digest.c_str());
    std::printf("best C=%g%s cv_score=%.4f\n", art.grid.best_C,
                config.kernel == SvmKernel::rbf
                    ? (" gamma=" + std::to_string(art.grid.best_gamma)).c_str()
                    : "",
                art.grid.best_score);
    print_report(art.report);
    return 0;
  }

  if (eval_cmd->parsed()) {
    const LoadedArtifact art = load_artifact(eval_artifact);
    const fs::path manifest =
        eval_manifest.empty() ? fs::path(eval_artifact) / "split_manifest.csv" : fs::path(eval_manifest);
    const EvalReport report = run_evaluate(art, manifest, eval_images, eval_jobs, hooks);
    print_report(report);
    if (!eval_metrics_out.empty()) write_metrics_csv(eval_metrics_out, report);
    return 0;
  }

  if (predict_cmd->parsed()) {
    const LoadedArtifact art = load_artifact(predict_artifact);
    std::vector<fs::path> images;
    for (const auto& p : predict_images) images.emplace_back(p);
    if (!predict_list.empty()) {
      std::ifstream in(predict_list);
      if (!in) throw DataError("cannot open image list: " + predict_list);
      std::string line;
      while (std::getline(in, line))
        if (!line.empty()) images.emplace_back(line);
    }
    if (images.empty()) throw ConfigError("no images given");
    const auto predictions = run_predict(art, images, predict_jobs, hooks);
    std::ostringstream csv;
    csv << "image,score,label,error\n";
    for (const auto& p : predictions) {
      csv << p.image.string() << ',';
      if (p.error.empty())
        csv << p.score << ',' << (p.defective ? "defective" : "functional") << ",\n";
      else
        csv << ",," << p.error << '\n';
    }
    std::fputs(csv.str().c_str(), stdout);
    if (!predict_out.empty()) write_text_file(predict_out, csv.str());
    return 0;
  }

  if (sweep_cmd->parsed()) {
    const PipelineConfig config = build_config(sweep_cfg);
    const auto cells =
        run_grid_sweep(config, sweep_index, sweep_out, parse_n_range(sweep_ns), sweep_weighting, hooks);
    std::printf("wrote %s/sweep.csv (%zu cells)\n", sweep_out.c_str(), cells.size());
    for (const auto& c : cells)
      std::printf("n=%-3d weighted=%d macroF1=%.4f auc=%.4f%s%s\n", c.n, c.weighted ? 1 : 0,
                  c.macro_f1, c.auc, c.error.empty() ? "" : " error: ", c.error.c_str());
    return 0;
  }

  if (lc_cmd->parsed()) {
    const PipelineConfig config = build_config(lc_cfg);
    const auto points = run_learning_curve(config, lc_index, lc_out, parse_fraction_list(lc_fractions),
                                           lc_repeats, hooks);
    std::printf("wrote %s/learning_curve.csv (%zu records)\n", lc_out.c_str(), points.size());
    return 0;
  }

  if (plot_cmd->parsed()) {
    if (!plot_roc.empty()) {
      std::vector<std::pair<std::string, RocCurve>> curves;
      std::istringstream is(plot_roc);
      std::string file;
      while (std::getline(is, file, ',')) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot open roc csv: " + file);
        std::string line;
        std::getline(in, line);  // header
        RocCurve curve;
        while (std::getline(in, line)) {
          double t, fpr, tpr;
          if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &fpr, &tpr) == 3) {
            curve.thresholds.push_back(t);
            curve.fpr.push_back(fpr);
            curve.tpr.push_back(tpr);
          } else if (line.rfind("inf,", 0) == 0 && std::sscanf(line.c_str() + 4, "%lf,%lf", &fpr, &tpr) == 2) {
            curve.thresholds.push_back(std::numeric_limits<double>::infinity());
            curve.fpr.push_back(fpr);
            curve.tpr.push_back(tpr);
          }
        }
        curves.emplace_back(fs::path(file).stem().string(), std::move(curve));
      }
      write_text_file(plot_out, roc_svg(curves, plot_title.empty() ? "ROC" : plot_title));
      std::printf("wrote %s\n", plot_out.c_str());
      return 0;
    }
    if (!plot_lc.empty()) {
      std::ifstream in(plot_lc);
      if (!in) throw DataError("cannot open learning-curve csv: " + plot_lc);
      std::string line;
      std::getline(in, line);
      std::map<double, std::vector<double>> values;
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string fr, rep, metric, value;
        if (std::getline(ls, fr, ',') && std::getline(ls, rep, ',') &&
            std::getline(ls, metric, ',') && std::getline(ls, value) && metric == plot_metric)
          values[std::stod(fr)].push_back(std::stod(value));
      }
      if (values.empty()) throw DataError("no rows for metric '" + plot_metric + "'");
      std::vector<std::pair<std::string, BoxplotStats>> groups;
      for (const auto& [fraction, vs] : values) {
        char label[32];
        std::snprintf(label, sizeof(label), "%g%%", fraction * 100.0);
        groups.emplace_back(label, boxplot_stats(vs));
      }
      write_text_file(plot_out,
                      boxplot_svg(groups, plot_title.empty() ? plot_metric : plot_title, plot_metric));
      std::printf("wrote %s\n", plot_out.c_str());
      return 0;
    }
    throw ConfigError("plot needs --roc or --learning-curve");
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
