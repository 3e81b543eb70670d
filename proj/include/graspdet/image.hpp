#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "graspdet/errors.hpp"

namespace graspdet {

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  static RgbImage filled(int w, int h, std::uint8_t v = 0) {
    RgbImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(3) * w * h, v);
    return img;
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

// Per-pixel depth in raw sensor units (or meters) plus a validity mask.
// Invalid pixels carry depth 0 and mask false.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;

  static DepthImage invalid_filled(int w, int h) {
    DepthImage img;
    img.width = w;
    img.height = h;
    img.depth.assign(static_cast<std::size_t>(w) * h, 0.0);
    img.valid.assign(static_cast<std::size_t>(w) * h, 0);
    return img;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  void set(int x, int y, double z) {
    depth[index(x, y)] = z;
    valid[index(x, y)] = 1;
  }
};

// RGB with the blue channel replaced by normalized depth; interleaved R,G,D.
struct RgdImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  static RgdImage filled(int w, int h, std::uint8_t v = 0) {
    RgdImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(3) * w * h, v);
    return img;
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

// Replace blue with depth normalized per-image over the valid pixels.
// Invalid depth maps to 0; a constant depth field maps every valid pixel to
// the midpoint 128. With keep_blue the original blue channel is kept instead
// (RGB input mode) and depth is ignored.
inline RgdImage compose_rgd(const RgbImage& rgb, const DepthImage& depth,
                            bool keep_blue = false) {
  if (rgb.width != depth.width || rgb.height != depth.height) {
    throw DimensionMismatch("rgb " + std::to_string(rgb.width) + "x" +
                            std::to_string(rgb.height) + " vs depth " +
                            std::to_string(depth.width) + "x" +
                            std::to_string(depth.height));
  }
  RgdImage out;
  out.width = rgb.width;
  out.height = rgb.height;
  out.pixels = rgb.pixels;
  if (keep_blue) return out;

  double z_min = 0.0, z_max = 0.0;
  bool any = false;
  const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
  for (std::size_t i = 0; i < n; ++i) {
    if (!depth.valid[i]) continue;
    if (!any) {
      z_min = z_max = depth.depth[i];
      any = true;
    } else {
      z_min = std::min(z_min, depth.depth[i]);
      z_max = std::max(z_max, depth.depth[i]);
    }
  }
  const double span = z_max - z_min;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t d = 0;
    if (depth.valid[i]) {
      d = span <= 0.0 ? 128
                      : static_cast<std::uint8_t>(std::lround(
                            255.0 * (depth.depth[i] - z_min) / span));
    }
    out.pixels[i * 3 + 2] = d;
  }
  return out;
}

}  // namespace graspdet
