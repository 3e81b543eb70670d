#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>
#include <vector>

#include "graspdet/errors.hpp"

namespace graspdet {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Five-parameter grasp configuration: center (x, y) in image pixels
// (y down), plate direction theta in degrees reduced to [0, 180), plate
// length w and opening distance h, both in pixels.
struct GraspRect {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double w = 0.0;
  double h = 0.0;
};

// Four corners, counterclockwise in (x, y) algebra (positive shoelace area).
using OrientedPolygon = std::array<Vec2, 4>;

// Axis-aligned box as center plus extent.
struct AxisAlignedBox {
  double cx = 0.0;
  double cy = 0.0;
  double bw = 0.0;
  double bh = 0.0;

  double x1() const { return cx - 0.5 * bw; }
  double y1() const { return cy - 0.5 * bh; }
  double x2() const { return cx + 0.5 * bw; }
  double y2() const { return cy + 0.5 * bh; }
  double area() const { return bw * bh; }
};

inline constexpr double kDegToRad = 0.017453292519943295;

// Reduce an angle to [0, 180); the gripper is symmetric under half turns.
inline double reduce_angle_180(double deg) {
  double r = std::fmod(deg, 180.0);
  if (r < 0.0) r += 180.0;
  if (r >= 180.0) r = 0.0;
  return r;
}

inline bool rect_is_valid(const GraspRect& r) {
  return std::isfinite(r.x) && std::isfinite(r.y) && std::isfinite(r.theta) &&
         r.w > 0.0 && r.h > 0.0 && r.theta >= 0.0 && r.theta < 180.0;
}

// Corners in order: c - u - v, c + u - v, c + u + v, c - u + v where u is the
// half plate edge and v the half opening edge.
inline OrientedPolygon rect_to_polygon(const GraspRect& r) {
  const double t = r.theta * kDegToRad;
  const Vec2 u{0.5 * r.w * std::cos(t), 0.5 * r.w * std::sin(t)};
  const Vec2 v{-0.5 * r.h * std::sin(t), 0.5 * r.h * std::cos(t)};
  const Vec2 c{r.x, r.y};
  return {c - u - v, c + u - v, c + u + v, c - u + v};
}

// Interpret four vertices as a rectangle: center is the vertex mean, w and
// theta come from the v1->v2 edge, h from v2->v3. Tolerates parallelogram
// noise up to 1e-3 relative on opposite edge lengths.
inline GraspRect polygon_to_rect(const OrientedPolygon& p) {
  for (const Vec2& v : p) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw NonRectangular("non-finite vertex");
    }
  }
  const Vec2 e1 = p[1] - p[0];
  const Vec2 e2 = p[2] - p[1];
  const Vec2 e3 = p[3] - p[2];
  const Vec2 e4 = p[0] - p[3];
  const double w = norm(e1);
  const double h = norm(e2);
  if (w <= 0.0 || h <= 0.0) throw NonRectangular("repeated vertex");

  const double tol = 1e-3;
  if (std::abs(norm(e3) - w) > tol * std::max(norm(e3), w) ||
      std::abs(norm(e4) - h) > tol * std::max(norm(e4), h)) {
    throw NonRectangular("opposite edge lengths differ beyond tolerance");
  }

  GraspRect r;
  r.x = 0.25 * (p[0].x + p[1].x + p[2].x + p[3].x);
  r.y = 0.25 * (p[0].y + p[1].y + p[2].y + p[3].y);
  r.w = w;
  r.h = h;
  r.theta = reduce_angle_180(std::atan2(e1.y, e1.x) / kDegToRad);
  return r;
}

// Discard orientation, keep dimensions: the ground-truth form used to train
// the proposal stage.
inline AxisAlignedBox reset_to_axis_aligned(const GraspRect& r) {
  return {r.x, r.y, r.w, r.h};
}

// Smallest angular distance under the 180-degree symmetry; always in [0, 90].
inline double angle_difference(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
  return std::min(d, 180.0 - d);
}

inline double polygon_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    s += cross(a, b);
  }
  return 0.5 * std::abs(s);
}

// Sutherland-Hodgman: clip a convex subject polygon against one convex clip
// polygon given counterclockwise (positive-area) vertex order.
inline std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject,
                                     const std::vector<Vec2>& clip) {
  std::vector<Vec2> poly = subject;
  const std::size_t cn = clip.size();
  for (std::size_t i = 0; i < cn && !poly.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % cn];
    const Vec2 edge = b - a;
    std::vector<Vec2> out;
    out.reserve(poly.size() + 1);
    const std::size_t pn = poly.size();
    for (std::size_t j = 0; j < pn; ++j) {
      const Vec2 cur = poly[j];
      const Vec2 nxt = poly[(j + 1) % pn];
      const double dc = cross(edge, cur - a);
      const double dn = cross(edge, nxt - a);
      if (dc >= 0.0) out.push_back(cur);
      if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
        const double t = dc / (dc - dn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
    poly = std::move(out);
  }
  return poly;
}

inline double rect_intersection_area(const GraspRect& a, const GraspRect& b) {
  const OrientedPolygon pa = rect_to_polygon(a);
  const OrientedPolygon pb = rect_to_polygon(b);
  const std::vector<Vec2> inter =
      clip_convex(std::vector<Vec2>(pa.begin(), pa.end()),
                  std::vector<Vec2>(pb.begin(), pb.end()));
  if (inter.size() < 3) return 0.0;
  const double area = polygon_area(inter);
  return area < 1e-12 ? 0.0 : area;  // degenerate slivers count as empty
}

// Jaccard index of the two rectangles as point sets. Operands are ordered
// canonically before clipping so J(a,b) and J(b,a) run the same arithmetic.
inline double jaccard_index(const GraspRect& a, const GraspRect& b) {
  auto key = [](const GraspRect& r) {
    return std::make_tuple(r.x, r.y, r.theta, r.w, r.h);
  };
  const GraspRect& lo = key(a) <= key(b) ? a : b;
  const GraspRect& hi = key(a) <= key(b) ? b : a;
  const double inter = rect_intersection_area(lo, hi);
  const double uni = lo.w * lo.h + hi.w * hi.h - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// The paper's success criterion: angle within the threshold (inclusive) and
// Jaccard strictly above it.
inline bool is_correct(const GraspRect& pred, const GraspRect& gt,
                       double j_thresh = 0.25, double a_thresh = 30.0) {
  if (angle_difference(pred.theta, gt.theta) > a_thresh) return false;
  return jaccard_index(pred, gt) > j_thresh;
}

// Axis-aligned IoU, used for anchor matching and NMS.
inline double box_iou(const AxisAlignedBox& a, const AxisAlignedBox& b) {
  const double ix = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
  const double iy = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

}  // namespace graspdet
