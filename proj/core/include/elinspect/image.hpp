#pragma once

#include <filesystem>
#include <vector>

namespace elinspect {

/// Row-major grayscale raster with intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

GrayImage make_image(int width, int height, float fill = 0.0f);

/**
 * Decodes a PNG into a GrayImage. 8-bit samples map to v/255, 16-bit to
 * v/65535; RGB(A) inputs are reduced to luma with BT.601 weights
 * (0.299, 0.587, 0.114). Anything that is not a decodable PNG with
 * positive dimensions is a DataError.
 */
GrayImage load_png(const std::filesystem::path& path);

/// Encodes as 8-bit grayscale PNG (intensities quantized by round(v*255)).
void save_png8(const GrayImage& img, const std::filesystem::path& path);

/// Bilinear resize (pixel-center alignment). Output stays within
/// [min(input), max(input)].
GrayImage resize(const GrayImage& img, int new_width, int new_height);

/// x/y derivatives: ½-scaled central differences in the interior, one-sided
/// full differences on the borders.
struct Gradients {
  GrayImage gx;
  GrayImage gy;
};

Gradients gradients(const GrayImage& img);

}  // namespace elinspect
