#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace elinspect {

struct LinearSvmModel {
  Eigen::VectorXd w;
  double b = 0.0;
  double C = 1.0;
};

struct RbfSvmModel {
  Eigen::MatrixXd support_vectors;
  Eigen::VectorXd alphas;  // signed dual coefficients alpha_i * y_i, all nonzero
  double b = 0.0;
  double gamma = 1.0;
  double C = 1.0;
};

struct LinearTrainOptions {
  double eps = 1e-4;      // stop when max-min projected-gradient violation < eps
  int max_epochs = 1000;
  std::uint64_t seed = 0;  // epoch permutation order
};

struct LinearTrainInfo {
  int epochs = 0;
  double primal = 0.0;
  double dual = 0.0;  // dual objective value (= -min of the dual problem form)
};

/**
 * L2-regularized squared-hinge linear SVM with per-sample penalties,
 * trained by dual coordinate descent (Hsieh et al., ICML 2008):
 *
 *   min_w,b  0.5 (||w||^2 + b^2) + C * sum_i weight_i * max(0, 1 - y_i (w.x_i + b))^2
 *
 * The bias is handled by augmenting features with a constant 1 (and is thus
 * regularized). Coordinates are visited in a freshly seeded permutation per
 * epoch; training stops when the spread of projected-gradient violations
 * over an epoch falls below eps or after max_epochs epochs. Deterministic
 * for fixed options.
 */
LinearSvmModel train_linear(const Eigen::MatrixXd& X, const std::vector<int>& y,
                            const Eigen::VectorXd& weights, double C,
                            const LinearTrainOptions& opts = {},
                            LinearTrainInfo* info = nullptr);

/// Primal objective of the model above (for oracle comparisons).
double linear_primal_objective(const LinearSvmModel& model, const Eigen::MatrixXd& X,
                               const std::vector<int>& y, const Eigen::VectorXd& weights,
                               double C);

struct RbfTrainOptions {
  double eps = 1e-3;        // KKT violation tolerance m(alpha) - M(alpha)
  double cache_mb = 64.0;   // LRU kernel-row cache budget
};

struct RbfTrainInfo {
  long iterations = 0;
  double dual = 0.0;  // value of e'a - 0.5 a'Qa at the solution
};

/**
 * C-SVM with RBF kernel k(x,z) = exp(-gamma ||x-z||^2) and per-sample box
 * bounds U_i = C * weight_i, solved by SMO with second-order working-set
 * selection and an LRU cache of kernel rows. Support vectors are the rows
 * with nonzero alpha.
 */
RbfSvmModel train_rbf(const Eigen::MatrixXd& X, const std::vector<int>& y,
                      const Eigen::VectorXd& weights, double C, double gamma,
                      const RbfTrainOptions& opts = {}, RbfTrainInfo* info = nullptr);

double decision_value(const LinearSvmModel& model, const Eigen::VectorXd& x);
double decision_value(const RbfSvmModel& model, const Eigen::VectorXd& x);

enum class SvmKernel { linear, rbf };

struct GridSearchSpec {
  SvmKernel kernel = SvmKernel::linear;
  std::vector<double> C_candidates;
  std::vector<double> gamma_candidates;  // empty for the linear kernel
  int folds = 5;
  std::uint64_t seed = 0;
  bool weighted_scoring = true;  // weighted macro-F1 fold scores

  /// C in {10^k | k = -2..6}.
  static GridSearchSpec linear_default(std::uint64_t seed = 0);
  /// C in {10^k | k = 2..6}, gamma in {1e-7, 1e-6, 1/S}.
  static GridSearchSpec rbf_default(std::size_t train_size, std::uint64_t seed = 0);
};

struct GridCell {
  double C = 0.0;
  double gamma = 0.0;  // NaN for linear
  double mean_score = 0.0;
  std::vector<double> fold_scores;
};

struct GridSearchResult {
  double best_C = 0.0;
  double best_gamma = 0.0;  // NaN for linear
  double best_score = 0.0;
  std::vector<GridCell> table;
};

/**
 * Grid search over (C[, gamma]) scored by mean weighted macro-F1 over
 * stratified k-fold cross-validation; folds are built per class by a seeded
 * shuffle dealt round-robin, so fold class ratios deviate from the global
 * ratio by at most one sample. Ties resolve to the smaller C, then the
 * smaller gamma. `jobs` parallelizes over candidates (results are merged by
 * candidate index, so the outcome is scheduling-independent).
 */
GridSearchResult grid_search(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             const Eigen::VectorXd& weights, const GridSearchSpec& spec,
                             unsigned jobs = 1);

}  // namespace elinspect
