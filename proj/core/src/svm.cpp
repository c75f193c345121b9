#include "elinspect/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "elinspect/errors.hpp"
#include "elinspect/eval.hpp"
#include "elinspect/parallel.hpp"
#include "elinspect/rng.hpp"

namespace elinspect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;

void validate_training_input(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const Eigen::VectorXd& weights) {
  if (X.rows() < 2) throw DataError("svm training needs at least 2 samples");
  if (static_cast<Eigen::Index>(y.size()) != X.rows() || weights.size() != X.rows())
    throw ConfigError("label/weight count does not match sample count");
  if (!X.allFinite()) throw NumericError("non-finite feature values");
  bool pos = false, neg = false;
  for (int label : y) {
    if (label == 1)
      pos = true;
    else if (label == -1)
      neg = true;
    else
      throw ConfigError("labels must be +1 or -1");
  }
  if (!pos || !neg) throw DataError("svm training needs both classes");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights[i] > 0.0)) throw ConfigError("sample weights must be positive");
}

// LRU cache of RBF kernel rows, keyed by sample index.
class KernelCache {
public:
  KernelCache(const Eigen::MatrixXd& X, double gamma, double budget_mb)
      : X_(X), gamma_(gamma) {
    norms_ = X.rowwise().squaredNorm();
    const auto row_bytes = static_cast<double>(X.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, static_cast<std::size_t>(budget_mb * 1024.0 * 1024.0 / row_bytes));
  }

  const Eigen::VectorXd& row(Eigen::Index i) {
    auto it = map_.find(i);
    if (it != map_.end()) {
      rows_.splice(rows_.begin(), rows_, it->second);
      return it->second->second;
    }
    if (rows_.size() >= capacity_) {
      map_.erase(rows_.back().first);
      rows_.pop_back();
    }
    Eigen::VectorXd r =
        (-gamma_ * ((norms_.array() - 2.0 * (X_ * X_.row(i).transpose()).array()) + norms_[i]))
            .cwiseMin(0.0)
            .exp();
    rows_.emplace_front(i, std::move(r));
    map_[i] = rows_.begin();
    return rows_.front().second;
  }

private:
  const Eigen::MatrixXd& X_;
  double gamma_;
  Eigen::VectorXd norms_;
  std::size_t capacity_;
  std::list<std::pair<Eigen::Index, Eigen::VectorXd>> rows_;
  std::unordered_map<Eigen::Index, decltype(rows_)::iterator> map_;
};

}  // namespace

LinearSvmModel train_linear(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const Eigen::VectorXd& weights, double C,
                            const LinearTrainOptions& opts, LinearTrainInfo* info) {
  validate_training_input(X, y, weights);
  if (!(C > 0.0)) throw ConfigError("penalty C must be positive");

  const Eigen::Index n = X.rows();
  const Eigen::Index dim = X.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim + 1);  // last entry is the bias
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);

  Eigen::VectorXd diag(n);  // D_ii = 1/(2 C_i) of the dual
  Eigen::VectorXd qd(n);    // ||x'_i||^2 + D_ii
  for (Eigen::Index i = 0; i < n; ++i) {
    diag[i] = 0.5 / (C * weights[i]);
    qd[i] = X.row(i).squaredNorm() + 1.0 + diag[i];
  }

  std::vector<Eigen::Index> index(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) index[static_cast<std::size_t>(i)] = i;

  Rng rng(opts.seed);
  int epoch = 0;
  for (; epoch < opts.max_epochs; ++epoch) {
    rng.shuffle(index);
    double pg_max = -kInf, pg_min = kInf;
    for (const Eigen::Index i : index) {
      const double yi = y[static_cast<std::size_t>(i)];
      const double margin = w.head(dim).dot(X.row(i)) + w[dim];
      const double g = yi * margin - 1.0 + alpha[i] * diag[i];

      double pg = g;
      if (alpha[i] == 0.0) pg = std::min(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);

      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::max(old - g / qd[i], 0.0);
        const double delta = (alpha[i] - old) * yi;
        w.head(dim) += delta * X.row(i).transpose();
        w[dim] += delta;
      }
    }
    if (pg_max - pg_min < opts.eps) {
      ++epoch;
      break;
    }
  }

  LinearSvmModel model;
  model.w = w.head(dim);
  model.b = w[dim];
  model.C = C;
  if (info) {
    info->epochs = epoch;
    info->primal = linear_primal_objective(model, X, y, weights, C);
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) quad += alpha[i] * alpha[i] * diag[i];
    info->dual = alpha.sum() - 0.5 * (w.squaredNorm() + quad);
  }
  return model;
}

double linear_primal_objective(const LinearSvmModel& model, const Eigen::MatrixXd& X,
                               const std::vector<int>& y, const Eigen::VectorXd& weights,
                               double C) {
  double obj = 0.5 * (model.w.squaredNorm() + model.b * model.b);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double margin = y[static_cast<std::size_t>(i)] * (model.w.dot(X.row(i)) + model.b);
    const double hinge = std::max(0.0, 1.0 - margin);
    obj += C * weights[i] * hinge * hinge;
  }
  return obj;
}

RbfSvmModel train_rbf(const Eigen::MatrixXd& X, const std::vector<int>& y,
                      const Eigen::VectorXd& weights, double C, double gamma,
                      const RbfTrainOptions& opts, RbfTrainInfo* info) {
  validate_training_input(X, y, weights);
  if (!(C > 0.0)) throw ConfigError("penalty C must be positive");
  if (!(gamma > 0.0)) throw ConfigError("kernel coefficient gamma must be positive");

  const Eigen::Index n = X.rows();
  Eigen::VectorXd upper(n);
  for (Eigen::Index i = 0; i < n; ++i) upper[i] = C * weights[i];

  KernelCache cache(X, gamma, opts.cache_mb);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // grad of 0.5 a'Qa - e'a

  const long max_iter = std::max(10000000L, 100L * static_cast<long>(n));
  long iter = 0;
  double g_max = 0.0, g_min = 0.0;
  for (; iter < max_iter; ++iter) {
    // Working-set selection: maximal violating pair, second-order j.
    Eigen::Index i = -1;
    g_max = -kInf;
    g_min = kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool in_up = y[static_cast<std::size_t>(t)] == 1 ? alpha[t] < upper[t] : alpha[t] > 0.0;
      if (in_up && -y[static_cast<std::size_t>(t)] * grad[t] >= g_max) {
        g_max = -y[static_cast<std::size_t>(t)] * grad[t];
        i = t;
      }
    }
    if (i < 0) break;
    const Eigen::VectorXd& ki = cache.row(i);

    Eigen::Index j = -1;
    double obj_min = kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool in_low = y[static_cast<std::size_t>(t)] == 1 ? alpha[t] > 0.0 : alpha[t] < upper[t];
      if (!in_low) continue;
      const double neg_yg = -y[static_cast<std::size_t>(t)] * grad[t];
      g_min = std::min(g_min, neg_yg);
      const double diff = g_max - neg_yg;
      if (diff > 0.0) {
        // K_tt = 1 for the RBF kernel, so no row fetch is needed here.
        const double quad = std::max(
            kTau, 2.0 - 2.0 * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(t)] * ki[t]);
        const double dec = -(diff * diff) / quad;
        if (dec <= obj_min) {
          obj_min = dec;
          j = t;
        }
      }
    }
    if (g_max - g_min < opts.eps || j < 0) break;

    const Eigen::VectorXd& kj = cache.row(j);
    const double yi = y[static_cast<std::size_t>(i)], yj = y[static_cast<std::size_t>(j)];
    const double quad = std::max(kTau, ki[i] + kj[j] - 2.0 * yi * yj * ki[j]);
    const double step = (-yi * grad[i] + yj * grad[j]) / quad;

    const double old_ai = alpha[i], old_aj = alpha[j];
    const double sum = yi * old_ai + yj * old_aj;
    alpha[i] = std::clamp(old_ai + yi * step, 0.0, upper[i]);
    alpha[j] = yj * (sum - yi * alpha[i]);
    alpha[j] = std::clamp(alpha[j], 0.0, upper[j]);
    alpha[i] = yi * (sum - yj * alpha[j]);
    alpha[i] = std::clamp(alpha[i], 0.0, upper[i]);

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    if (dai == 0.0 && daj == 0.0) break;
    for (Eigen::Index t = 0; t < n; ++t)
      grad[t] += y[static_cast<std::size_t>(t)] * (yi * dai * ki[t] + yj * daj * kj[t]);
  }

  // Bias from the KKT bounds (average over free vectors when any exist).
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[static_cast<std::size_t>(t)] * grad[t];
    if (alpha[t] >= upper[t]) {
      (y[static_cast<std::size_t>(t)] == -1 ? ub = std::min(ub, yg) : lb = std::max(lb, yg));
    } else if (alpha[t] <= 0.0) {
      (y[static_cast<std::size_t>(t)] == 1 ? ub = std::min(ub, yg) : lb = std::max(lb, yg));
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

  RbfSvmModel model;
  model.b = -rho;
  model.gamma = gamma;
  model.C = C;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] > 0.0) sv.push_back(t);
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  model.alphas.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = X.row(sv[s]);
    model.alphas[static_cast<Eigen::Index>(s)] = alpha[sv[s]] * y[static_cast<std::size_t>(sv[s])];
  }
  if (info) {
    info->iterations = iter;
    // 0.5 a'Qa = 0.5 a'(grad + e), since grad = Qa - e.
    info->dual = alpha.sum() - 0.5 * alpha.dot(grad + Eigen::VectorXd::Ones(n));
  }
  return model;
}

double decision_value(const LinearSvmModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.w.size()) throw ConfigError("feature dimension mismatch");
  return model.w.dot(x) + model.b;
}

double decision_value(const RbfSvmModel& model, const Eigen::VectorXd& x) {
  if (model.support_vectors.cols() != x.size()) throw ConfigError("feature dimension mismatch");
  double sum = model.b;
  for (Eigen::Index s = 0; s < model.support_vectors.rows(); ++s) {
    const double d2 = (model.support_vectors.row(s).transpose() - x).squaredNorm();
    sum += model.alphas[s] * std::exp(-model.gamma * d2);
  }
  return sum;
}

GridSearchSpec GridSearchSpec::linear_default(std::uint64_t seed) {
  GridSearchSpec spec;
  spec.kernel = SvmKernel::linear;
  for (int k = -2; k <= 6; ++k) spec.C_candidates.push_back(std::pow(10.0, k));
  spec.seed = seed;
  return spec;
}

GridSearchSpec GridSearchSpec::rbf_default(std::size_t train_size, std::uint64_t seed) {
  GridSearchSpec spec;
  spec.kernel = SvmKernel::rbf;
  for (int k = 2; k <= 6; ++k) spec.C_candidates.push_back(std::pow(10.0, k));
  spec.gamma_candidates = {1e-7, 1e-6, 1.0 / static_cast<double>(train_size)};
  spec.seed = seed;
  return spec;
}

GridSearchResult grid_search(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const Eigen::VectorXd& weights, const GridSearchSpec& spec,
                             unsigned jobs) {
  validate_training_input(X, y, weights);
  const Eigen::Index n = X.rows();
  if (spec.folds < 2) throw ConfigError("grid search needs at least 2 folds");
  if (n < spec.folds) throw DataError("fewer samples than folds");
  if (spec.C_candidates.empty()) throw ConfigError("empty C candidate set");
  if (spec.kernel == SvmKernel::rbf && spec.gamma_candidates.empty())
    throw ConfigError("rbf grid search needs gamma candidates");

  // Stratified folds: per class, seeded shuffle dealt round-robin.
  std::vector<int> fold_of(static_cast<std::size_t>(n), -1);
  {
    Rng rng(spec.seed);
    for (int cls : {1, -1}) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i)
        if (y[static_cast<std::size_t>(i)] == cls) members.push_back(i);
      if (static_cast<int>(members.size()) < spec.folds)
        throw DataError("degenerate folds: a class has fewer samples than folds");
      rng.shuffle(members);
      for (std::size_t k = 0; k < members.size(); ++k)
        fold_of[static_cast<std::size_t>(members[k])] = static_cast<int>(k % static_cast<std::size_t>(spec.folds));
    }
  }

  // Candidate list in (C asc, gamma asc) order; scanning with strict '>'
  // then realizes the smaller-C / smaller-gamma tie-break.
  std::vector<GridCell> table;
  auto cs = spec.C_candidates;
  std::sort(cs.begin(), cs.end());
  if (spec.kernel == SvmKernel::linear) {
    for (double c : cs) table.push_back({c, std::numeric_limits<double>::quiet_NaN(), 0.0, {}});
  } else {
    auto gs = spec.gamma_candidates;
    std::sort(gs.begin(), gs.end());
    for (double c : cs)
      for (double g : gs) table.push_back({c, g, 0.0, {}});
  }

  auto run_candidate = [&](std::size_t ci) {
    GridCell& cell = table[ci];
    cell.fold_scores.resize(static_cast<std::size_t>(spec.folds));
    for (int f = 0; f < spec.folds; ++f) {
      std::vector<Eigen::Index> train_idx, test_idx;
      for (Eigen::Index i = 0; i < n; ++i)
        (fold_of[static_cast<std::size_t>(i)] == f ? test_idx : train_idx).push_back(i);

      Eigen::MatrixXd Xt(static_cast<Eigen::Index>(train_idx.size()), X.cols());
      std::vector<int> yt(train_idx.size());
      Eigen::VectorXd wt(static_cast<Eigen::Index>(train_idx.size()));
      for (std::size_t k = 0; k < train_idx.size(); ++k) {
        Xt.row(static_cast<Eigen::Index>(k)) = X.row(train_idx[k]);
        yt[k] = y[static_cast<std::size_t>(train_idx[k])];
        wt[static_cast<Eigen::Index>(k)] = weights[train_idx[k]];
      }

      std::vector<int> truth, pred;
      Eigen::VectorXd fold_weights(static_cast<Eigen::Index>(test_idx.size()));
      if (spec.kernel == SvmKernel::linear) {
        LinearTrainOptions opts;
        opts.seed = spec.seed ^ (0x9e3779b97f4a7c15ULL * (ci + 1) + static_cast<std::uint64_t>(f));
        const LinearSvmModel model = train_linear(Xt, yt, wt, cell.C, opts);
        for (std::size_t k = 0; k < test_idx.size(); ++k) {
          truth.push_back(y[static_cast<std::size_t>(test_idx[k])] == 1 ? 1 : 0);
          pred.push_back(decision_value(model, X.row(test_idx[k]).transpose()) > 0.0 ? 1 : 0);
          fold_weights[static_cast<Eigen::Index>(k)] = weights[test_idx[k]];
        }
      } else {
        const RbfSvmModel model = train_rbf(Xt, yt, wt, cell.C, cell.gamma);
        for (std::size_t k = 0; k < test_idx.size(); ++k) {
          truth.push_back(y[static_cast<std::size_t>(test_idx[k])] == 1 ? 1 : 0);
          pred.push_back(decision_value(model, X.row(test_idx[k]).transpose()) > 0.0 ? 1 : 0);
          fold_weights[static_cast<Eigen::Index>(k)] = weights[test_idx[k]];
        }
      }
      cell.fold_scores[static_cast<std::size_t>(f)] =
          spec.weighted_scoring ? weighted_macro_f1(truth, pred, fold_weights)
                                : precision_recall_f1(confusion(truth, pred)).macro_f1;
    }
    double mean = 0.0;
    for (double s : cell.fold_scores) mean += s;
    cell.mean_score = mean / static_cast<double>(spec.folds);
  };

  parallel_for(table.size(), jobs, run_candidate);

  GridSearchResult result;
  result.table = table;
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i)
    if (table[i].mean_score > table[best].mean_score) best = i;
  result.best_C = table[best].C;
  result.best_gamma = table[best].gamma;
  result.best_score = table[best].mean_score;
  return result;
}

}  // namespace elinspect
