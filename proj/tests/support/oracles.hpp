#pragma once

// Independent reference implementations used as test oracles. Everything
// here is written as the dumbest possible direct evaluation of the
// definitions, sharing no code with the library paths it checks.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "elinspect/features.hpp"
#include "elinspect/image.hpp"

namespace elinspect::test::oracle {

/// Brute-force VLAD: the double loop over (descriptor, centroid) with the
/// nearest-centroid indicator, plain double accumulation.
Eigen::VectorXd vlad_brute(const Eigen::MatrixXf& X, const Eigen::MatrixXf& centroids);

/// Per-centroid assignment counts of the same brute-force rule.
std::vector<int> vlad_assignment_counts(const Eigen::MatrixXf& X, const Eigen::MatrixXf& centroids);

/// Full-batch Lloyd iterations from the given centers until assignments
/// stop changing.
Eigen::MatrixXd lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centers, int max_iters = 1000);

/// Minimum of the weighted squared-hinge primal (bias augmented and
/// regularized) by backtracking-line-search gradient descent run to a tight
/// gradient tolerance.
double primal_gd_min(const Eigen::MatrixXd& X, const std::vector<int>& y,
                     const Eigen::VectorXd& weights, double C, long max_iters = 500000,
                     double grad_tol = 1e-10);

/// Maximum of the hinge dual  e'a - 0.5 a'Qa  over the box [0,U] and the
/// constraint y'a = 0, by projected gradient ascent (projection via
/// bisection on the equality multiplier). Returns the dual value.
double rbf_dual_max(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const Eigen::VectorXd& upper, double gamma, long iters = 300000);

/// AUC by counting (positive, negative) score pairs, half credit for ties.
double auc_pairs(const std::vector<double>& scores, const std::vector<int>& y);

/// FAST-9 predicate on an 8-bit raster: an arc of >= 9 contiguous circle
/// pixels all brighter than c+t or all darker than c-t, checked by testing
/// every one of the 16 possible arc start positions.
bool fast9_corner(const std::vector<std::uint8_t>& img, int w, int x, int y, int t);

/// Largest passing threshold by linear scan from t upward.
int fast9_score_scan(const std::vector<std::uint8_t>& img, int w, int x, int y, int t);

/// Complete dumb detector: predicate + linear-scan score + the scan-order
/// 3x3 non-maximum rule. Returns (x, y) pairs.
std::vector<std::pair<int, int>> fast9_detect(const GrayImage& img, int threshold);

/// Direct SIFT histogram at a keypoint (orientation 0): plain loops over
/// the patch with trilinear votes, Gaussian weighting, L2-clamp-L2.
Eigen::VectorXf sift_direct(const GrayImage& img, const Keypoint& kp);

/// Direct 9-bin orientation histogram of one 8x8 HOG cell of a 256x256
/// image (no block normalization).
std::array<double, 9> hog_cell_direct(const GrayImage& img256, int cell_x, int cell_y);

}  // namespace elinspect::test::oracle
