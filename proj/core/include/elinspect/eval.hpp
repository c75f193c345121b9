#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elinspect/dataset.hpp"

namespace elinspect {

/// rows = ground truth (0 functional, 1 defective), columns = predicted.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 2>, 2> counts{{{0, 0}, {0, 0}}};

  std::int64_t total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
  }
  /// Rows divided by row sums (zero rows stay zero).
  std::array<std::array<double, 2>, 2> normalized() const;
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct ClassPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Summary {
  ClassPRF functional;
  ClassPRF defective;
  double macro_f1 = 0.0;
};

/// Per-class precision/recall/F1 with the 0/0 -> 0 convention, and the
/// unweighted mean of the two per-class F1 values.
F1Summary precision_recall_f1(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

/// Macro-F1 over sample-weighted tallies (used for inner-CV model
/// selection).
double weighted_macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                         const Eigen::VectorXd& weights);

struct RocCurve {
  std::vector<double> thresholds;  // +inf at the (0,0) anchor, -inf at (1,1)
  std::vector<double> fpr;
  std::vector<double> tpr;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

/**
 * ROC by descending threshold sweep over the unique scores (tied scores
 * form a single step) with AUC by the trapezoidal rule, which equals the
 * Mann-Whitney statistic with half credit for ties. Requires both classes.
 */
RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& y_true);

struct GroupReport {
  std::int64_t n = 0;
  ConfusionMatrix cm;
  double accuracy = 0.0;
  F1Summary f1;
  double auc = 0.0;  // NaN when the group holds a single class
  RocCurve roc;
};

struct EvalReport {
  std::optional<GroupReport> mono;
  std::optional<GroupReport> poly;
  GroupReport combined;
  std::vector<std::string> notes;
  std::string config_digest;
  std::map<std::string, std::string> metadata;
};

/**
 * Builds the full report from per-sample scores: hard labels at threshold 0,
 * metrics per wafer group and combined. Empty groups are omitted with a
 * note; single-class groups get NaN AUC with a note. When weighted is set,
 * accuracy and the F1 block use the sample weights (the confusion matrix
 * stays integer counts either way).
 */
EvalReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& y_true,
                           const std::vector<Wafer>& wafers, double threshold = 0.0,
                           bool weighted = false, const Eigen::VectorXd* weights = nullptr);

struct BoxplotStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

/// Tukey boxplot statistics: linearly interpolated quartiles, whiskers at
/// the most extreme points within 1.5*IQR of the box, the rest outliers.
BoxplotStats boxplot_stats(std::vector<double> values);

struct LearningCurvePoint {
  double fraction = 0.0;
  int repeat = 0;
  std::string metric;
  double value = 0.0;
};

/// Retrains on a training subset and reports test metrics; keys are metric
/// names ("macro_f1", "auc", "accuracy").
using RetrainFn = std::function<std::map<std::string, double>(
    const std::vector<LabeledSample>& subset, std::uint64_t seed)>;

/**
 * Learning-curve experiment: for every fraction and repeat, draws a
 * stratified subsample with seed seed0 + repeat, invokes the retrain
 * callback, and records each returned metric. Output order is
 * (fraction, repeat, metric name), independent of execution order.
 */
std::vector<LearningCurvePoint> learning_curve(const std::vector<LabeledSample>& train,
                                               const std::vector<double>& fractions, int repeats,
                                               std::uint64_t seed0, const RetrainFn& retrain);

}  // namespace elinspect
