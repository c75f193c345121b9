#include "elinspect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "elinspect/errors.hpp"

namespace elinspect {

namespace {

ClassPRF prf_from_tallies(double tp, double fp, double fn) {
  ClassPRF out;
  out.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  out.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  out.f1 = out.precision + out.recall > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

F1Summary f1_from_tallies(const std::array<std::array<double, 2>, 2>& t) {
  F1Summary s;
  s.functional = prf_from_tallies(t[0][0], t[1][0], t[0][1]);
  s.defective = prf_from_tallies(t[1][1], t[0][1], t[1][0]);
  s.macro_f1 = 0.5 * (s.functional.f1 + s.defective.f1);
  return s;
}

void check_binary(const std::vector<int>& y) {
  for (int v : y)
    if (v != 0 && v != 1) throw ConfigError("labels must be 0 or 1");
}

}  // namespace

std::array<std::array<double, 2>, 2> ConfusionMatrix::normalized() const {
  std::array<std::array<double, 2>, 2> out{{{0.0, 0.0}, {0.0, 0.0}}};
  for (int r = 0; r < 2; ++r) {
    const auto row_sum = static_cast<double>(counts[static_cast<std::size_t>(r)][0] + counts[static_cast<std::size_t>(r)][1]);
    if (row_sum > 0.0)
      for (int c = 0; c < 2; ++c)
        out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
            static_cast<double>(counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) / row_sum;
  }
  return out;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw ConfigError("label vectors differ in length");
  if (y_true.empty()) throw ConfigError("cannot build a confusion matrix from zero samples");
  check_binary(y_true);
  check_binary(y_pred);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  return cm;
}

F1Summary precision_recall_f1(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw ConfigError("empty confusion matrix");
  std::array<std::array<double, 2>, 2> t;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      t[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          static_cast<double>(cm.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  return f1_from_tallies(t);
}

double accuracy(const ConfusionMatrix& cm) {
  return static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(cm.total());
}

double weighted_macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                         const Eigen::VectorXd& weights) {
  if (y_true.size() != y_pred.size() ||
      static_cast<Eigen::Index>(y_true.size()) != weights.size())
    throw ConfigError("label/weight vectors differ in length");
  check_binary(y_true);
  check_binary(y_pred);
  std::array<std::array<double, 2>, 2> t{{{0.0, 0.0}, {0.0, 0.0}}};
  for (std::size_t i = 0; i < y_true.size(); ++i)
    t[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])] +=
        weights[static_cast<Eigen::Index>(i)];
  return f1_from_tallies(t).macro_f1;
}

RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& y_true) {
  if (scores.size() != y_true.size()) throw ConfigError("score/label vectors differ in length");
  check_binary(y_true);
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("non-finite score");

  std::int64_t n_pos = 0, n_neg = 0;
  for (int v : y_true) (v == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw DataError("roc needs both classes");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocResult out;
  out.curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  out.curve.fpr.push_back(0.0);
  out.curve.tpr.push_back(0.0);

  double auc2 = 0.0;  // twice the area, accumulated per trapezoid
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double cut = scores[order[i]];
    std::int64_t step_tp = 0, step_fp = 0;
    while (i < order.size() && scores[order[i]] == cut) {
      (y_true[order[i]] == 1 ? step_tp : step_fp)++;
      ++i;
    }
    const double fpr0 = static_cast<double>(fp) / static_cast<double>(n_neg);
    const double tpr0 = static_cast<double>(tp) / static_cast<double>(n_pos);
    tp += step_tp;
    fp += step_fp;
    const double fpr1 = static_cast<double>(fp) / static_cast<double>(n_neg);
    const double tpr1 = static_cast<double>(tp) / static_cast<double>(n_pos);
    auc2 += (fpr1 - fpr0) * (tpr0 + tpr1);
    out.curve.thresholds.push_back(cut);
    out.curve.fpr.push_back(fpr1);
    out.curve.tpr.push_back(tpr1);
  }
  out.auc = auc2 / 2.0;
  return out;
}

EvalReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& y_true,
                           const std::vector<Wafer>& wafers, double threshold, bool weighted,
                           const Eigen::VectorXd* weights) {
  if (scores.size() != y_true.size() || scores.size() != wafers.size())
    throw ConfigError("score/label/wafer vectors differ in length");
  if (scores.empty()) throw DataError("cannot evaluate zero samples");
  if (weighted && (!weights || static_cast<std::size_t>(weights->size()) != scores.size()))
    throw ConfigError("weighted evaluation needs a matching weight vector");

  EvalReport report;
  auto build_group = [&](const std::vector<std::size_t>& idx,
                         const char* name) -> std::optional<GroupReport> {
    if (idx.empty()) {
      report.notes.push_back(std::string("group ") + name + " is empty and was omitted");
      return std::nullopt;
    }
    GroupReport g;
    g.n = static_cast<std::int64_t>(idx.size());
    std::vector<int> truth, pred;
    std::vector<double> group_scores;
    std::array<std::array<double, 2>, 2> wt{{{0.0, 0.0}, {0.0, 0.0}}};
    double w_correct = 0.0, w_total = 0.0;
    for (std::size_t k : idx) {
      const int t = y_true[k];
      const int p = scores[k] > threshold ? 1 : 0;
      truth.push_back(t);
      pred.push_back(p);
      group_scores.push_back(scores[k]);
      const double w = weighted ? (*weights)[static_cast<Eigen::Index>(k)] : 1.0;
      wt[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += w;
      w_total += w;
      if (t == p) w_correct += w;
    }
    g.cm = confusion(truth, pred);
    g.accuracy = w_correct / w_total;
    g.f1 = f1_from_tallies(wt);
    const bool both = std::count(truth.begin(), truth.end(), 1) > 0 &&
                      std::count(truth.begin(), truth.end(), 0) > 0;
    if (both) {
      RocResult roc = roc_auc(group_scores, truth);
      g.auc = roc.auc;
      g.roc = std::move(roc.curve);
    } else {
      g.auc = std::numeric_limits<double>::quiet_NaN();
      report.notes.push_back(std::string("group ") + name +
                             " holds a single class; AUC is undefined");
    }
    return g;
  };

  std::vector<std::size_t> mono_idx, poly_idx, all_idx;
  for (std::size_t i = 0; i < wafers.size(); ++i) {
    (wafers[i] == Wafer::mono ? mono_idx : poly_idx).push_back(i);
    all_idx.push_back(i);
  }
  report.mono = build_group(mono_idx, "mono");
  report.poly = build_group(poly_idx, "poly");
  report.combined = *build_group(all_idx, "combined");
  return report;
}

BoxplotStats boxplot_stats(std::vector<double> values) {
  if (values.empty()) throw ConfigError("boxplot of zero values");
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return (1.0 - frac) * values[lo] + frac * values[hi];
  };
  BoxplotStats s;
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q3;
  s.whisker_high = s.q1;
  bool any_in = false;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      if (!any_in) {
        s.whisker_low = v;
        s.whisker_high = v;
        any_in = true;
      } else {
        s.whisker_low = std::min(s.whisker_low, v);
        s.whisker_high = std::max(s.whisker_high, v);
      }
    }
  }
  return s;
}

std::vector<LearningCurvePoint> learning_curve(const std::vector<LabeledSample>& train,
                                               const std::vector<double>& fractions, int repeats,
                                               std::uint64_t seed0, const RetrainFn& retrain) {
  if (repeats < 1) throw ConfigError("learning curve needs at least 1 repeat");
  for (double f : fractions)
    if (f <= 0.0 || f > 1.0) throw ConfigError("learning-curve fractions must lie in (0,1]");

  std::vector<LearningCurvePoint> points;
  for (double fraction : fractions) {
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(r);
      const auto subset = stratified_subsample(train, fraction, seed);
      const auto metrics = retrain(subset, seed);
      for (const auto& [name, value] : metrics)
        points.push_back({fraction, r, name, value});
    }
  }
  return points;
}

}  // namespace elinspect
