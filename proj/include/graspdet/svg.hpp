#pragma once

// Overlay renderer. Grasp rectangles are drawn edge by edge so the gripper
// plates and the opening span are visually distinct: plate edges carry the
// strong stroke (red for predictions), opening edges the light one (white),
// with ground truth in green. Output is deterministic byte-for-byte.

#include <cstdio>
#include <string>
#include <vector>

#include "graspdet/detection.hpp"
#include "graspdet/geometry.hpp"

namespace graspdet {

namespace detail {

inline void append_rect_lines(std::string& out, const GraspRect& r,
                              const char* plate_style, const char* open_style) {
  const OrientedPolygon p = rect_to_polygon(r);
  char buf[256];
  // v0->v1 and v2->v3 run along the plate direction
  const int plate_pairs[2][2] = {{0, 1}, {2, 3}};
  const int open_pairs[2][2] = {{1, 2}, {3, 0}};
  for (const auto& e : plate_pairs) {
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" %s/>\n",
                  p[e[0]].x, p[e[0]].y, p[e[1]].x, p[e[1]].y, plate_style);
    out += buf;
  }
  for (const auto& e : open_pairs) {
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" %s/>\n",
                  p[e[0]].x, p[e[0]].y, p[e[1]].x, p[e[1]].y, open_style);
    out += buf;
  }
}

}  // namespace detail

inline std::string export_overlay(int width, int height,
                                  const std::vector<Detection>& detections,
                                  const std::vector<GraspRect>& gts,
                                  const std::string& image_href = "") {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  out += buf;
  if (image_href.empty()) {
    std::snprintf(buf, sizeof(buf),
                  "  <rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"#1b1b1b\"/>\n",
                  width, height);
    out += buf;
  } else {
    std::snprintf(buf, sizeof(buf),
                  "  <image href=\"%s\" x=\"0\" y=\"0\" width=\"%d\" height=\"%d\"/>\n",
                  image_href.c_str(), width, height);
    out += buf;
  }
  for (const GraspRect& gt : gts) {
    detail::append_rect_lines(
        out, gt, "stroke=\"#2e7d32\" stroke-width=\"2\"",
        "stroke=\"#81c784\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"");
  }
  for (const Detection& d : detections) {
    std::snprintf(buf, sizeof(buf), "  <!-- score %.4f class %d -->\n", d.score, d.cls);
    out += buf;
    detail::append_rect_lines(out, d.rect, "stroke=\"#e53935\" stroke-width=\"2\"",
                              "stroke=\"#ffffff\" stroke-width=\"1.5\"");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace graspdet
