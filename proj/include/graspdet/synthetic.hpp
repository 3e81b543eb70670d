#pragma once

// Procedural bar scenes: one bright oriented bar on a dark background, with
// depth closer on the bar, labeled by grasps across the bar. Used by the
// test suites and handy for smoke-testing the CLI without a real corpus.

#include <cmath>
#include <string>
#include <vector>

#include "graspdet/dataset.hpp"
#include "graspdet/geometry.hpp"
#include "graspdet/image.hpp"
#include "graspdet/netpbm.hpp"
#include "graspdet/rng.hpp"

namespace graspdet {

struct BarScene {
  RgbImage rgb;      // blue carries nothing; depth goes to the D channel
  DepthImage depth;  // meters, bar closer than background
  std::vector<GraspRect> grasps;
  std::string id;
};

// Bar proportions relative to the frame size.
struct BarShape {
  double length_lo = 0.50, length_hi = 0.70;
  double thick_lo = 0.12, thick_hi = 0.18;
  double center_lo = 0.35, center_hi = 0.65;
  double grasp_w_lo = 0.16, grasp_w_hi = 0.22;
  double grasp_h_pad = 0.07;  // opening = thickness + pad * size
};

// Proportions for large source frames that will pass through the crop /
// rotate / resize recipe before training: sized so the bar survives the
// crops and lands at the same on-screen scale as the direct preset.
inline BarShape bar_shape_for_augmented_source() {
  BarShape s;
  s.length_lo = 0.36;
  s.length_hi = 0.46;
  s.thick_lo = 0.085;
  s.thick_hi = 0.125;
  s.center_lo = 0.40;
  s.center_hi = 0.60;
  s.grasp_w_lo = 0.11;
  s.grasp_w_hi = 0.15;
  s.grasp_h_pad = 0.05;
  return s;
}

inline BarScene make_bar_scene(int size, Rng& rng, const std::string& id,
                               const BarShape& shape = BarShape()) {
  BarScene scene;
  scene.id = id;
  scene.rgb = RgbImage::filled(size, size, 0);
  scene.depth = DepthImage::invalid_filled(size, size);

  const double angle = rng.uniform(0.0, 180.0);
  const double length = rng.uniform(shape.length_lo, shape.length_hi) * size;
  const double thick = rng.uniform(shape.thick_lo, shape.thick_hi) * size;
  const double cx = rng.uniform(shape.center_lo, shape.center_hi) * size;
  const double cy = rng.uniform(shape.center_lo, shape.center_hi) * size;
  const double rad = angle * kDegToRad;
  const double ux = std::cos(rad), uy = std::sin(rad);

  const double fg_r = rng.uniform(200.0, 245.0);
  const double fg_g = rng.uniform(160.0, 220.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = (x + 0.5) - cx;
      const double dy = (y + 0.5) - cy;
      const double u = dx * ux + dy * uy;
      const double v = -dx * uy + dy * ux;
      const double edge = std::min(0.5 * length - std::abs(u),
                                   0.5 * thick - std::abs(v));
      const double cov = std::clamp(edge + 0.5, 0.0, 1.0);
      const double noise = rng.uniform(0.0, 12.0);
      scene.rgb.at(x, y, 0) = static_cast<std::uint8_t>(
          std::clamp(noise + cov * fg_r, 0.0, 255.0));
      scene.rgb.at(x, y, 1) = static_cast<std::uint8_t>(
          std::clamp(noise + cov * fg_g, 0.0, 255.0));
      scene.rgb.at(x, y, 2) = 10;
      scene.depth.set(x, y, 0.9 - 0.4 * cov + 0.004 * rng.uniform());
    }
  }

  // grasps across the bar: plates along the bar axis, opening spans the bar
  const double gw = rng.uniform(shape.grasp_w_lo, shape.grasp_w_hi) * size;
  const double gh = thick + shape.grasp_h_pad * size;
  for (const double f : {-0.24, 0.0, 0.24}) {
    const double off = f * length;
    scene.grasps.push_back({cx + off * ux, cy + off * uy,
                            reduce_angle_180(angle), gw, gh});
  }
  return scene;
}

inline DatasetSample scene_to_sample(const BarScene& scene, bool keep_blue = false) {
  DatasetSample s;
  s.rgd = compose_rgd(scene.rgb, scene.depth, keep_blue);
  s.positives = scene.grasps;
  s.id = scene.id;
  return s;
}

inline std::vector<DatasetSample> make_bar_corpus(int count, int size,
                                                  std::uint64_t seed,
                                                  const std::string& prefix = "bar",
                                                  const BarShape& shape = BarShape()) {
  std::vector<DatasetSample> out;
  out.reserve(count);
  Rng base(seed);
  for (int i = 0; i < count; ++i) {
    Rng rng = base.split(static_cast<std::uint64_t>(i) + 100);
    char id[64];
    std::snprintf(id, sizeof(id), "%s%04d_000", prefix.c_str(), i);
    out.push_back(scene_to_sample(make_bar_scene(size, rng, id, shape)));
  }
  return out;
}

// Materialize scenes in the on-disk dataset layout (r.ppm + d.pgm + cpos.txt).
inline void write_bar_dataset(const std::string& dir, int count, int size,
                              std::uint64_t seed, const std::string& prefix = "bar") {
  Rng base(seed);
  for (int i = 0; i < count; ++i) {
    Rng rng = base.split(static_cast<std::uint64_t>(i) + 100);
    char id[64];
    std::snprintf(id, sizeof(id), "%s%04d_000", prefix.c_str(), i);
    const BarScene scene = make_bar_scene(size, rng, id);
    std::vector<std::uint16_t> mm(static_cast<std::size_t>(size) * size);
    for (std::size_t p = 0; p < mm.size(); ++p) {
      mm[p] = static_cast<std::uint16_t>(std::lround(scene.depth.depth[p] * 1000.0));
    }
    const std::string stem = dir + "/" + id;
    write_file(stem + "r.ppm", encode_p6(scene.rgb));
    write_file(stem + "d.pgm", encode_p5_16(size, size, mm));
    write_file(stem + "cpos.txt", encode_rect_file(scene.grasps));
  }
}

}  // namespace graspdet
