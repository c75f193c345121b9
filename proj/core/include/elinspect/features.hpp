#pragma once

#include <Eigen/Core>
#include <vector>

#include "elinspect/image.hpp"

namespace elinspect {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;        // spatial bin size of the descriptor patch (px)
  double orientation = 0.0;  // radians
};

/// Uniform n-by-n sampling grid. patch_scale <= 0 selects the default
/// patch size: descriptor patch side = 2x the grid spacing (so
/// patch_scale = min(width, height) / (2n)).
struct DenseGridSpec {
  int n = 60;
  double patch_scale = 0.0;
};

struct DescriptorSet {
  Eigen::MatrixXf descriptors;  // one row per keypoint
  std::vector<Keypoint> keypoints;

  Eigen::Index rows() const { return descriptors.rows(); }
  Eigen::Index dim() const { return descriptors.cols(); }
};

enum class DescriptorKind { sift, hog };

struct SamplingStrategy {
  enum class Kind { dense, corners, whole_image };
  Kind kind = Kind::dense;
  DenseGridSpec grid{};
  int corner_threshold = 5;
  double corner_patch_scale = 2.5;

  static SamplingStrategy dense(DenseGridSpec spec) {
    SamplingStrategy s;
    s.kind = Kind::dense;
    s.grid = spec;
    return s;
  }
  static SamplingStrategy corners(int threshold, double patch_scale = 2.5) {
    SamplingStrategy s;
    s.kind = Kind::corners;
    s.corner_threshold = threshold;
    s.corner_patch_scale = patch_scale;
    return s;
  }
  static SamplingStrategy whole_image() {
    SamplingStrategy s;
    s.kind = Kind::whole_image;
    return s;
  }
};

/// Round-trippable text forms ("dense:60:2.5", "corners:5:2.5", "whole";
/// "sift"/"hog") used by config files and container metadata.
std::string to_string(const SamplingStrategy& s);
SamplingStrategy sampling_from_string(const std::string& text);
const char* to_string(DescriptorKind k);
DescriptorKind descriptor_from_string(const std::string& text);

/// n^2 keypoints at the centers of an n-by-n subdivision of the image,
/// x_i = (i + 0.5) * width / n, orientation 0.
std::vector<Keypoint> dense_grid(const DenseGridSpec& spec, int width, int height);

/**
 * FAST-9 segment-test corners: a pixel is a corner at threshold t when at
 * least 9 contiguous pixels of its 16-pixel Bresenham circle are all
 * brighter than center + t or all darker than center - t (on the 8-bit
 * intensity scale; the raster is quantized by round(v*255) first). The
 * corner score is the largest threshold at which the test still passes;
 * non-maximum suppression keeps scan-order-first local score maxima over
 * 3x3 neighborhoods. An empty result is legal.
 */
std::vector<Keypoint> detect_corners(const GrayImage& img, int threshold,
                                     double patch_scale = 2.5);

constexpr int kSiftDim = 128;

/**
 * 128-d SIFT descriptor at a keypoint: 4x4 spatial bins of size kp.scale
 * and 8 orientation bins over the patch of side 4*kp.scale rotated by
 * kp.orientation, Gaussian spatial weighting (sigma = half the patch side),
 * trilinear soft-binning, then L2-normalize, clamp entries at 0.2 and
 * L2-renormalize. A patch with no gradient energy yields the zero vector.
 */
Eigen::VectorXf sift_descriptor(const Gradients& grad, const Keypoint& kp);
Eigen::VectorXf sift_descriptor(const GrayImage& img, const Keypoint& kp);

constexpr int kHogDim = 31 * 31 * 36;

/**
 * Dense HOG over a 256x256 image: 8x8-pixel cells, 9 unsigned orientation
 * bins (nearest-bin voting), 2x2-cell blocks at 1-cell stride, per-block
 * L2-hys normalization (clip 0.2), concatenated to 31*31*36 = 34596 values.
 */
Eigen::VectorXf hog_descriptor(const GrayImage& img_256);

/// Runs the sampling strategy and descriptor over one image. SIFT pairs
/// with dense or corner sampling; HOG only with the whole-image path
/// (the image is resized to 256x256 if needed). Anything else is a
/// ConfigError. Deterministic: identical inputs give bitwise-identical
/// output.
DescriptorSet extract(const GrayImage& img, const SamplingStrategy& strategy,
                      DescriptorKind descriptor);

}  // namespace elinspect
