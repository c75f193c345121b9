#include "elinspect/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "elinspect/errors.hpp"

namespace elinspect {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_error_to_exception(png_structp png, png_const_charp msg) {
  (void)png;
  throw DataError(std::string("png: ") + msg);
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

GrayImage make_image(int width, int height, float fill) {
  GrayImage img;
  img.width = width;
  img.height = height;
  img.data.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  return img;
}

GrayImage load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw DataError("cannot open image file: " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw DataError("not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_exception, png_warning_ignore);
  if (!png) throw DataError("png: failed to allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("png: failed to allocate info struct");
  }

  GrayImage img;
  try {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (width == 0 || height == 0) throw DataError("png has zero dimension: " + path.string());
    if (bit_depth > 16) throw DataError("unsupported png bit depth: " + std::to_string(bit_depth));

    // Normalize everything to 8- or 16-bit gray or RGB triples.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // little-endian 16-bit samples
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);

    std::vector<png_byte> pixels(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + row_bytes * y;
    png_read_image(png, rows.data());

    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.data.resize(static_cast<std::size_t>(width) * height);

    const float scale = depth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
    for (png_uint_32 y = 0; y < height; ++y) {
      const png_byte* row = rows[y];
      float* dst = img.data.data() + static_cast<std::size_t>(y) * width;
      for (png_uint_32 x = 0; x < width; ++x) {
        float v;
        if (channels >= 3) {
          float r, g, b;
          if (depth == 16) {
            const auto* p = reinterpret_cast<const std::uint16_t*>(row) + x * channels;
            r = static_cast<float>(p[0]);
            g = static_cast<float>(p[1]);
            b = static_cast<float>(p[2]);
          } else {
            const png_byte* p = row + static_cast<std::size_t>(x) * static_cast<std::size_t>(channels);
            r = p[0];
            g = p[1];
            b = p[2];
          }
          v = (0.299f * r + 0.587f * g + 0.114f * b) * scale;
        } else {
          v = depth == 16
                  ? static_cast<float>(reinterpret_cast<const std::uint16_t*>(row)[x]) * scale
                  : static_cast<float>(row[x]) * scale;
        }
        dst[x] = std::clamp(v, 0.0f, 1.0f);
      }
    }
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_png8(const GrayImage& img, const std::filesystem::path& path) {
  if (img.width <= 0 || img.height <= 0) throw DataError("cannot encode empty image");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw DataError("cannot write image file: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_exception, png_warning_ignore);
  if (!png) throw DataError("png: failed to allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("png: failed to allocate info struct");
  }

  try {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const float v = std::clamp(img.at(x, y), 0.0f, 1.0f);
        row[static_cast<std::size_t>(x)] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

GrayImage resize(const GrayImage& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw ConfigError("resize target must be at least 1x1");
  if (img.width < 1 || img.height < 1) throw DataError("cannot resize empty image");
  if (new_width == img.width && new_height == img.height) return img;

  GrayImage out = make_image(new_width, new_height);
  const double sx = static_cast<double>(img.width) / new_width;
  const double sy = static_cast<double>(img.height) / new_height;
  for (int y = 0; y < new_height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    const double fy = std::clamp(src_y, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const double fx = std::clamp(src_x, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
      const double bot = (1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
      out.at(x, y) = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

Gradients gradients(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) throw DataError("gradients need at least a 3x3 image");
  Gradients g{make_image(img.width, img.height), make_image(img.width, img.height)};
  const int w = img.width, h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float dx, dy;
      if (x == 0)
        dx = img.at(1, y) - img.at(0, y);
      else if (x == w - 1)
        dx = img.at(w - 1, y) - img.at(w - 2, y);
      else
        dx = 0.5f * (img.at(x + 1, y) - img.at(x - 1, y));
      if (y == 0)
        dy = img.at(x, 1) - img.at(x, 0);
      else if (y == h - 1)
        dy = img.at(x, h - 1) - img.at(x, h - 2);
      else
        dy = 0.5f * (img.at(x, y + 1) - img.at(x, y - 1));
      g.gx.at(x, y) = dx;
      g.gy.at(x, y) = dy;
    }
  }
  return g;
}

}  // namespace elinspect
