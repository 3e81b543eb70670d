#pragma once

// Cornell-style grasp annotation files: one "x y" vertex per line, four lines
// per rectangle. Groups containing a non-finite coordinate (the dataset marks
// missing corners with NaN) are skipped and counted rather than failing the
// whole file.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "graspdet/errors.hpp"
#include "graspdet/geometry.hpp"

namespace graspdet {

struct RectFileResult {
  std::vector<OrientedPolygon> polygons;
  int skipped_groups = 0;
};

inline RectFileResult parse_rect_file(const std::string& text,
                                      const std::string& origin = "rects") {
  std::istringstream in(text);
  std::string line;
  std::vector<Vec2> points;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // trailing blank lines are common in the corpus
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string sx, sy, extra;
    ls >> sx >> sy;
    if (sy.empty() || (ls >> extra)) {
      throw MalformedLine(origin + ":" + std::to_string(line_no) +
                          ": expected 'x y', got '" + line + "'");
    }
    Vec2 p;
    try {
      std::size_t ux = 0, uy = 0;
      p.x = std::stod(sx, &ux);
      p.y = std::stod(sy, &uy);
      if (ux != sx.size() || uy != sy.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw MalformedLine(origin + ":" + std::to_string(line_no) +
                          ": non-numeric token in '" + line + "'");
    }
    points.push_back(p);
  }
  if (points.size() % 4 != 0) {
    throw TruncatedGroup(origin + ": " + std::to_string(points.size()) +
                         " vertices is not a multiple of 4");
  }

  RectFileResult result;
  for (std::size_t g = 0; g + 3 < points.size(); g += 4) {
    bool finite = true;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!std::isfinite(points[g + i].x) || !std::isfinite(points[g + i].y)) {
        finite = false;
        break;
      }
    }
    if (!finite) {
      ++result.skipped_groups;
      continue;
    }
    result.polygons.push_back(
        {points[g], points[g + 1], points[g + 2], points[g + 3]});
  }
  return result;
}

inline std::string encode_rect_file(const std::vector<GraspRect>& rects) {
  std::string out;
  char buf[80];
  for (const GraspRect& r : rects) {
    const OrientedPolygon p = rect_to_polygon(r);
    for (const Vec2& v : p) {
      std::snprintf(buf, sizeof(buf), "%.6f %.6f\n", v.x, v.y);
      out += buf;
    }
  }
  return out;
}

}  // namespace graspdet
