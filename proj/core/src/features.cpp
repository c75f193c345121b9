#include "elinspect/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "elinspect/errors.hpp"

namespace elinspect {

namespace {

// ---------------------------------------------------------------------------
// FAST-9 segment test

// Bresenham circle of radius 3, clockwise from 12 o'clock (y grows down).
constexpr std::array<std::pair<int, int>, 16> kCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

std::vector<std::uint8_t> quantize_u8(const GrayImage& img) {
  std::vector<std::uint8_t> q(img.data.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const float v = std::clamp(img.data[i], 0.0f, 1.0f);
    q[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return q;
}

bool segment_test(const std::uint8_t* p, int stride, int x, int y, int t) {
  const int c = p[y * stride + x];
  const int hi = c + t;
  const int lo = c - t;
  // Longest circular run of all-brighter or all-darker circle pixels.
  int run_hi = 0, run_lo = 0, best_hi = 0, best_lo = 0;
  for (int i = 0; i < 32; ++i) {
    const auto [dx, dy] = kCircle[static_cast<std::size_t>(i & 15)];
    const int v = p[(y + dy) * stride + (x + dx)];
    run_hi = v > hi ? run_hi + 1 : 0;
    run_lo = v < lo ? run_lo + 1 : 0;
    best_hi = std::max(best_hi, run_hi);
    best_lo = std::max(best_lo, run_lo);
    if (best_hi >= 9 || best_lo >= 9) return true;
  }
  return false;
}

// Largest threshold at which the segment test still passes (the candidate
// is known to pass at `threshold`).
int corner_score(const std::uint8_t* p, int stride, int x, int y, int threshold) {
  int lo = threshold, hi = 255;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (segment_test(p, stride, x, y, mid))
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// SIFT

constexpr int kSpatialBins = 4;
constexpr int kOrientBins = 8;

void normalize_clamped(Eigen::VectorXf& v, float clamp) {
  double norm = v.cast<double>().norm();
  if (norm <= 0.0) {
    v.setZero();
    return;
  }
  v /= static_cast<float>(norm);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::min(v[i], clamp);
  norm = v.cast<double>().norm();
  if (norm <= 0.0) {
    v.setZero();
    return;
  }
  v /= static_cast<float>(norm);
}

}  // namespace

std::string to_string(const SamplingStrategy& s) {
  char buf[64];
  switch (s.kind) {
    case SamplingStrategy::Kind::dense:
      std::snprintf(buf, sizeof(buf), "dense:%d:%.17g", s.grid.n, s.grid.patch_scale);
      return buf;
    case SamplingStrategy::Kind::corners:
      std::snprintf(buf, sizeof(buf), "corners:%d:%.17g", s.corner_threshold, s.corner_patch_scale);
      return buf;
    default:
      return "whole";
  }
}

SamplingStrategy sampling_from_string(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part, ':')) parts.push_back(part);
  try {
    if (parts.size() == 1 && parts[0] == "whole") return SamplingStrategy::whole_image();
    if (!parts.empty() && parts[0] == "dense" && (parts.size() == 2 || parts.size() == 3))
      return SamplingStrategy::dense(
          DenseGridSpec{std::stoi(parts[1]), parts.size() == 3 ? std::stod(parts[2]) : 0.0});
    if (!parts.empty() && parts[0] == "corners" && (parts.size() == 2 || parts.size() == 3))
      return SamplingStrategy::corners(std::stoi(parts[1]),
                                       parts.size() == 3 ? std::stod(parts[2]) : 2.5);
  } catch (const std::exception&) {
    // fall through to the ConfigError below
  }
  throw ConfigError("unrecognized sampling strategy '" + text +
                    "' (expected dense:N[:patch], corners:T[:patch] or whole)");
}

const char* to_string(DescriptorKind k) { return k == DescriptorKind::sift ? "sift" : "hog"; }

DescriptorKind descriptor_from_string(const std::string& text) {
  if (text == "sift") return DescriptorKind::sift;
  if (text == "hog") return DescriptorKind::hog;
  throw ConfigError("unrecognized descriptor '" + text + "' (expected sift or hog)");
}

std::vector<Keypoint> dense_grid(const DenseGridSpec& spec, int width, int height) {
  if (spec.n < 1) throw ConfigError("dense grid needs n >= 1");
  if (width < spec.n || height < spec.n)
    throw ConfigError("dense grid is finer than the image");
  const double patch_scale =
      spec.patch_scale > 0.0 ? spec.patch_scale
                             : static_cast<double>(std::min(width, height)) / (2.0 * spec.n);
  std::vector<Keypoint> kps;
  kps.reserve(static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.n));
  for (int iy = 0; iy < spec.n; ++iy) {
    const double y = (iy + 0.5) * static_cast<double>(height) / spec.n;
    for (int ix = 0; ix < spec.n; ++ix) {
      const double x = (ix + 0.5) * static_cast<double>(width) / spec.n;
      kps.push_back(Keypoint{x, y, patch_scale, 0.0});
    }
  }
  return kps;
}

std::vector<Keypoint> detect_corners(const GrayImage& img, int threshold, double patch_scale) {
  if (threshold < 1 || threshold > 255)
    throw ConfigError("corner threshold must lie in [1,255]");
  std::vector<Keypoint> kps;
  if (img.width < 7 || img.height < 7) return kps;

  const auto q = quantize_u8(img);
  const int w = img.width, h = img.height;
  std::vector<int> score(q.size(), 0);
  for (int y = 3; y < h - 3; ++y)
    for (int x = 3; x < w - 3; ++x)
      if (segment_test(q.data(), w, x, y, threshold))
        score[static_cast<std::size_t>(y) * w + x] = corner_score(q.data(), w, x, y, threshold);

  // 3x3 non-maximum suppression; scan-order-first pixel wins a plateau.
  auto sc = [&](int x, int y) { return score[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      const int s = sc(x, y);
      if (s == 0) continue;
      if (s <= sc(x - 1, y - 1) || s <= sc(x, y - 1) || s <= sc(x + 1, y - 1) || s <= sc(x - 1, y))
        continue;
      if (s < sc(x + 1, y) || s < sc(x - 1, y + 1) || s < sc(x, y + 1) || s < sc(x + 1, y + 1))
        continue;
      kps.push_back(Keypoint{static_cast<double>(x), static_cast<double>(y), patch_scale, 0.0});
    }
  }
  return kps;
}

Eigen::VectorXf sift_descriptor(const Gradients& grad, const Keypoint& kp) {
  const GrayImage& gx = grad.gx;
  const GrayImage& gy = grad.gy;
  const int w = gx.width, h = gx.height;
  if (kp.x < 0.0 || kp.x >= w || kp.y < 0.0 || kp.y >= h)
    throw ConfigError("keypoint lies outside the image");
  if (kp.scale <= 0.0) throw ConfigError("keypoint scale must be positive");

  const double bin = kp.scale;
  const double sigma = 2.0 * bin;  // half the 4*bin patch side
  const double cos_t = std::cos(kp.orientation);
  const double sin_t = std::sin(kp.orientation);
  const bool rotated = kp.orientation != 0.0;
  const double radius = 2.5 * bin * (rotated ? std::numbers::sqrt2 : 1.0);

  const int x_lo = std::max(0, static_cast<int>(std::ceil(kp.x - radius)));
  const int x_hi = std::min(w - 1, static_cast<int>(std::floor(kp.x + radius)));
  const int y_lo = std::max(0, static_cast<int>(std::ceil(kp.y - radius)));
  const int y_hi = std::min(h - 1, static_cast<int>(std::floor(kp.y + radius)));

  std::array<double, kSiftDim> hist{};
  for (int py = y_lo; py <= y_hi; ++py) {
    for (int px = x_lo; px <= x_hi; ++px) {
      const double dx = px - kp.x;
      const double dy = py - kp.y;
      // Keypoint frame; u,v in units of spatial bins, offset so bin centers
      // sit at integer coordinates 0..3.
      const double rx = cos_t * dx + sin_t * dy;
      const double ry = -sin_t * dx + cos_t * dy;
      const double u = rx / bin + 1.5;
      const double v = ry / bin + 1.5;
      if (u <= -1.0 || u >= 4.0 || v <= -1.0 || v >= 4.0) continue;

      const double dgx = gx.at(px, py);
      const double dgy = gy.at(px, py);
      const double mag = std::sqrt(dgx * dgx + dgy * dgy);
      if (mag == 0.0) continue;
      const double weight = mag * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));

      double phi = std::atan2(dgy, dgx) - kp.orientation;
      const double two_pi = 2.0 * std::numbers::pi;
      phi -= two_pi * std::floor(phi / two_pi);
      const double o = phi * kOrientBins / two_pi;

      const int u0 = static_cast<int>(std::floor(u));
      const int v0 = static_cast<int>(std::floor(v));
      const int o0 = static_cast<int>(std::floor(o)) % kOrientBins;
      const double fu = u - std::floor(u);
      const double fv = v - std::floor(v);
      const double fo = o - std::floor(o);

      for (int dv = 0; dv <= 1; ++dv) {
        const int vb = v0 + dv;
        if (vb < 0 || vb >= kSpatialBins) continue;
        const double wv = dv ? fv : 1.0 - fv;
        for (int du = 0; du <= 1; ++du) {
          const int ub = u0 + du;
          if (ub < 0 || ub >= kSpatialBins) continue;
          const double wu = du ? fu : 1.0 - fu;
          for (int dob = 0; dob <= 1; ++dob) {
            const int ob = (o0 + dob) % kOrientBins;
            const double wo = dob ? fo : 1.0 - fo;
            hist[static_cast<std::size_t>((vb * kSpatialBins + ub) * kOrientBins + ob)] +=
                weight * wv * wu * wo;
          }
        }
      }
    }
  }

  Eigen::VectorXf desc(kSiftDim);
  for (int i = 0; i < kSiftDim; ++i) desc[i] = static_cast<float>(hist[static_cast<std::size_t>(i)]);
  normalize_clamped(desc, 0.2f);
  return desc;
}

Eigen::VectorXf sift_descriptor(const GrayImage& img, const Keypoint& kp) {
  return sift_descriptor(gradients(img), kp);
}

Eigen::VectorXf hog_descriptor(const GrayImage& img_256) {
  constexpr int kSide = 256;
  constexpr int kCell = 8;
  constexpr int kCells = kSide / kCell;  // 32
  constexpr int kBins = 9;
  constexpr int kBlocks = kCells - 1;  // 31
  if (img_256.width != kSide || img_256.height != kSide)
    throw ConfigError("hog_descriptor expects a 256x256 image");

  const Gradients g = gradients(img_256);
  std::vector<double> cells(static_cast<std::size_t>(kCells) * kCells * kBins, 0.0);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const double dx = g.gx.at(x, y);
      const double dy = g.gy.at(x, y);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      double theta = std::atan2(dy, dx);
      if (theta < 0.0) theta += std::numbers::pi;
      if (theta >= std::numbers::pi) theta -= std::numbers::pi;
      const int bin = std::min(kBins - 1, static_cast<int>(theta * kBins / std::numbers::pi));
      const int cx = x / kCell, cy = y / kCell;
      cells[static_cast<std::size_t>((cy * kCells + cx) * kBins + bin)] += mag;
    }
  }

  Eigen::VectorXf out(kHogDim);
  Eigen::VectorXf block(4 * kBins);
  Eigen::Index pos = 0;
  for (int by = 0; by < kBlocks; ++by) {
    for (int bx = 0; bx < kBlocks; ++bx) {
      int k = 0;
      for (int cy = by; cy <= by + 1; ++cy)
        for (int cx = bx; cx <= bx + 1; ++cx)
          for (int b = 0; b < kBins; ++b)
            block[k++] = static_cast<float>(cells[static_cast<std::size_t>((cy * kCells + cx) * kBins + b)]);
      normalize_clamped(block, 0.2f);
      out.segment(pos, 4 * kBins) = block;
      pos += 4 * kBins;
    }
  }
  return out;
}

DescriptorSet extract(const GrayImage& img, const SamplingStrategy& strategy,
                      DescriptorKind descriptor) {
  DescriptorSet set;
  if (descriptor == DescriptorKind::hog) {
    if (strategy.kind != SamplingStrategy::Kind::whole_image)
      throw ConfigError("hog only pairs with whole-image sampling");
    const GrayImage* input = &img;
    GrayImage resized;
    if (img.width != 256 || img.height != 256) {
      resized = resize(img, 256, 256);
      input = &resized;
    }
    set.descriptors.resize(1, kHogDim);
    set.descriptors.row(0) = hog_descriptor(*input).transpose();
    set.keypoints = {Keypoint{img.width / 2.0, img.height / 2.0, 128.0, 0.0}};
    return set;
  }

  std::vector<Keypoint> kps;
  switch (strategy.kind) {
    case SamplingStrategy::Kind::dense:
      kps = dense_grid(strategy.grid, img.width, img.height);
      break;
    case SamplingStrategy::Kind::corners:
      kps = detect_corners(img, strategy.corner_threshold, strategy.corner_patch_scale);
      break;
    default:
      throw ConfigError("sift requires dense or corner sampling");
  }

  set.descriptors.resize(static_cast<Eigen::Index>(kps.size()), kSiftDim);
  if (!kps.empty()) {
    const Gradients grad = gradients(img);
    for (std::size_t i = 0; i < kps.size(); ++i)
      set.descriptors.row(static_cast<Eigen::Index>(i)) = sift_descriptor(grad, kps[i]).transpose();
  }
  set.keypoints = std::move(kps);
  return set;
}

}  // namespace elinspect
