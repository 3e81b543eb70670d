#pragma once

// The preprocessing pipeline: center crop, random rotation, tighter center
// crop, random translation, resize. The five stages are composed into a
// single affine transform so the image is resampled exactly once and the
// labels follow the identical mapping.

#include <cmath>
#include <string>
#include <vector>

#include "graspdet/dataset.hpp"
#include "graspdet/errors.hpp"
#include "graspdet/geometry.hpp"
#include "graspdet/image.hpp"
#include "graspdet/rng.hpp"

namespace graspdet {

// Row-major 2x2 linear part plus translation; maps source pixel coordinates
// to output pixel coordinates. Continuous convention: pixel (i, j) covers
// [i, i+1) x [j, j+1) with its center at (i+0.5, j+0.5).
struct Affine2D {
  double m00 = 1.0, m01 = 0.0;
  double m10 = 0.0, m11 = 1.0;
  double tx = 0.0, ty = 0.0;

  Vec2 apply(Vec2 p) const {
    return {m00 * p.x + m01 * p.y + tx, m10 * p.x + m11 * p.y + ty};
  }

  double det() const { return m00 * m11 - m01 * m10; }

  Affine2D inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-9) throw SingularTransform("determinant " + std::to_string(d));
    Affine2D inv;
    inv.m00 = m11 / d;
    inv.m01 = -m01 / d;
    inv.m10 = -m10 / d;
    inv.m11 = m00 / d;
    inv.tx = -(inv.m00 * tx + inv.m01 * ty);
    inv.ty = -(inv.m10 * tx + inv.m11 * ty);
    return inv;
  }

  // this follows `first`: result(p) = this(first(p))
  Affine2D after(const Affine2D& first) const {
    Affine2D r;
    r.m00 = m00 * first.m00 + m01 * first.m10;
    r.m01 = m00 * first.m01 + m01 * first.m11;
    r.m10 = m10 * first.m00 + m11 * first.m10;
    r.m11 = m10 * first.m01 + m11 * first.m11;
    const Vec2 t = apply({first.tx, first.ty});
    r.tx = t.x;
    r.ty = t.y;
    return r;
  }

  static Affine2D translation(double dx, double dy) {
    Affine2D a;
    a.tx = dx;
    a.ty = dy;
    return a;
  }

  static Affine2D scaling(double s) {
    Affine2D a;
    a.m00 = a.m11 = s;
    return a;
  }

  static Affine2D rotation_deg(double deg) {
    const double t = deg * kDegToRad;
    Affine2D a;
    a.m00 = std::cos(t);
    a.m01 = -std::sin(t);
    a.m10 = std::sin(t);
    a.m11 = std::cos(t);
    return a;
  }

  static Affine2D rotation_about(double deg, Vec2 center) {
    return translation(center.x, center.y)
        .after(rotation_deg(deg))
        .after(translation(-center.x, -center.y));
  }
};

struct AugmentConfig {
  int crop1 = 351;          // first center crop
  int crop2 = 321;          // crop after rotation
  double max_translate = 50.0;
  int out_size = 227;
  int copies = 1000;        // per source image; desk-scale runs override this
  std::uint64_t seed = 0;
};

// Resample with bilinear interpolation; out-of-bounds source reads are 0,
// matching the invalid-depth convention.
inline RgdImage warp_image(const RgdImage& img, const Affine2D& transform,
                           int out_w, int out_h) {
  const Affine2D inv = transform.inverse();  // throws SingularTransform
  RgdImage out = RgdImage::filled(out_w, out_h);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const Vec2 src = inv.apply({ox + 0.5, oy + 0.5});
      const double u = src.x - 0.5;
      const double v = src.y - 0.5;
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      const double fx = u - x0;
      const double fy = v - y0;
      for (int c = 0; c < 3; ++c) {
        auto tap = [&](int x, int y) -> double {
          if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
          return img.at(x, y, c);
        };
        const double val = (1 - fx) * (1 - fy) * tap(x0, y0) +
                           fx * (1 - fy) * tap(x0 + 1, y0) +
                           (1 - fx) * fy * tap(x0, y0 + 1) +
                           fx * fy * tap(x0 + 1, y0 + 1);
        const long r = std::lround(val);
        out.at(ox, oy, c) = static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
      }
    }
  }
  return out;
}

// Transform a grasp rectangle by a similarity (rotation + translation +
// uniform scale). Shear or anisotropic scale is refused: the rectangle shape
// would not survive.
inline GraspRect warp_rect(const GraspRect& r, const Affine2D& a) {
  const double s0 = std::hypot(a.m00, a.m10);
  const double s1 = std::hypot(a.m01, a.m11);
  const double ortho = a.m00 * a.m01 + a.m10 * a.m11;
  const double scale = 0.5 * (s0 + s1);
  if (scale <= 0.0 || std::abs(s0 - s1) > 1e-9 * std::max(1.0, scale) ||
      std::abs(ortho) > 1e-9 * std::max(1.0, scale * scale)) {
    throw NonSimilarity("transform has shear or anisotropic scale");
  }
  const double phi = std::atan2(a.m10, a.m00) / kDegToRad;
  const Vec2 c = a.apply({r.x, r.y});
  return {c.x, c.y, reduce_angle_180(r.theta + phi), scale * r.w, scale * r.h};
}

// Draw the random stages and compose them into one transform. Exposed so
// tests can reproduce a pipeline from its drawn parameters.
inline Affine2D compose_augment_transform(int src_w, int src_h,
                                          const AugmentConfig& cfg, double rot_deg,
                                          double shift_x, double shift_y) {
  const double c1 = cfg.crop1;
  const double c2 = cfg.crop2;
  const Affine2D crop1 = Affine2D::translation(-0.5 * (src_w - c1), -0.5 * (src_h - c1));
  const Affine2D rot = Affine2D::rotation_about(rot_deg, {0.5 * c1, 0.5 * c1});
  const Affine2D crop2 = Affine2D::translation(-0.5 * (c1 - c2), -0.5 * (c1 - c2));
  const Affine2D shift = Affine2D::translation(shift_x, shift_y);
  const Affine2D resize = Affine2D::scaling(static_cast<double>(cfg.out_size) / c2);
  return resize.after(shift).after(crop2).after(rot).after(crop1);
}

// Resample through the composed transform while honoring the data loss of
// the staged recipe: a sample is zero when its path crosses outside either
// intermediate crop frame, exactly as the stage-by-stage warps would see.
inline RgdImage warp_image_staged(const RgdImage& img, int src_w, int src_h,
                                  const AugmentConfig& cfg, double rot_deg,
                                  double shift_x, double shift_y) {
  const double c1 = cfg.crop1;
  const double c2 = cfg.crop2;
  const double scale = static_cast<double>(cfg.out_size) / c2;
  const Affine2D rot_inv = Affine2D::rotation_about(-rot_deg, {0.5 * c1, 0.5 * c1});
  RgdImage out = RgdImage::filled(cfg.out_size, cfg.out_size);
  for (int oy = 0; oy < cfg.out_size; ++oy) {
    for (int ox = 0; ox < cfg.out_size; ++ox) {
      // walk the output point back through resize, shift, crop2, rot, crop1
      const Vec2 p4{(ox + 0.5) / scale, (oy + 0.5) / scale};
      const Vec2 p3{p4.x - shift_x, p4.y - shift_y};
      if (p3.x < 0.0 || p3.x > c2 || p3.y < 0.0 || p3.y > c2) continue;
      const Vec2 p2{p3.x + 0.5 * (c1 - c2), p3.y + 0.5 * (c1 - c2)};
      const Vec2 p1 = rot_inv.apply(p2);
      if (p1.x < 0.0 || p1.x > c1 || p1.y < 0.0 || p1.y > c1) continue;
      const Vec2 p0{p1.x + 0.5 * (src_w - c1), p1.y + 0.5 * (src_h - c1)};

      const double u = p0.x - 0.5;
      const double v = p0.y - 0.5;
      const int x0 = static_cast<int>(std::floor(u));
      const int y0 = static_cast<int>(std::floor(v));
      const double fx = u - x0;
      const double fy = v - y0;
      for (int c = 0; c < 3; ++c) {
        auto tap = [&](int x, int y) -> double {
          if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
          return img.at(x, y, c);
        };
        const double val = (1 - fx) * (1 - fy) * tap(x0, y0) +
                           fx * (1 - fy) * tap(x0 + 1, y0) +
                           (1 - fx) * fy * tap(x0, y0 + 1) +
                           fx * fy * tap(x0 + 1, y0 + 1);
        const long r = std::lround(val);
        out.at(ox, oy, c) = static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
      }
    }
  }
  return out;
}

// One augmented copy. Stage order: center crop to crop1, rotate uniformly in
// [0, 360), center crop to crop2, translate up to +-max_translate in x and y,
// resize to out_size. Rectangles with every corner outside the final frame
// are dropped. Inputs smaller than crop1 are implicitly zero-padded by the
// out-of-bounds sampling rule.
inline DatasetSample augment_sample(const DatasetSample& s, const AugmentConfig& cfg,
                                    Rng& rng) {
  if (cfg.crop2 > cfg.crop1 || cfg.out_size <= 0) {
    throw ConfigError("augment: requires crop2 <= crop1 and out_size > 0");
  }
  const double rot = rng.uniform(0.0, 360.0);
  const double sx = rng.uniform(-cfg.max_translate, cfg.max_translate);
  const double sy = rng.uniform(-cfg.max_translate, cfg.max_translate);
  const Affine2D a =
      compose_augment_transform(s.rgd.width, s.rgd.height, cfg, rot, sx, sy);

  DatasetSample out;
  out.id = s.id;
  out.rgd = warp_image_staged(s.rgd, s.rgd.width, s.rgd.height, cfg, rot, sx, sy);
  auto carry = [&](const std::vector<GraspRect>& in, std::vector<GraspRect>& dst) {
    for (const GraspRect& r : in) {
      const GraspRect moved = warp_rect(r, a);
      const OrientedPolygon poly = rect_to_polygon(moved);
      bool any_inside = false;
      for (const Vec2& v : poly) {
        if (v.x >= 0.0 && v.x <= cfg.out_size && v.y >= 0.0 && v.y <= cfg.out_size) {
          any_inside = true;
          break;
        }
      }
      if (any_inside) dst.push_back(moved);
    }
  };
  carry(s.positives, out.positives);
  carry(s.negatives, out.negatives);
  return out;
}

}  // namespace graspdet
