#pragma once

// ASCII PCD reader for Cornell-style depth clouds. Points carry an `index`
// field that addresses pixels of a width x height image in row-major order;
// the `z` field supplies the depth value. Pixels never referenced by a point
// stay invalid.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "graspdet/errors.hpp"
#include "graspdet/image.hpp"

namespace graspdet {

inline DepthImage parse_pcd(const std::string& text, int width, int height,
                            const std::string& origin = "pcd") {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> fields;
  bool data_seen = false;
  DepthImage img = DepthImage::invalid_filled(width, height);

  auto split = [](const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream ls(s);
    std::string t;
    while (ls >> t) toks.push_back(t);
    return toks;
  };

  // header
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> toks = split(line);
    if (toks.empty()) continue;
    if (toks[0] == "FIELDS") {
      fields.assign(toks.begin() + 1, toks.end());
    } else if (toks[0] == "DATA") {
      if (toks.size() < 2 || toks[1] != "ascii") {
        throw UnsupportedEncoding(origin + ": DATA " +
                                  (toks.size() > 1 ? toks[1] : "?") +
                                  " (only ascii supported)");
      }
      data_seen = true;
      break;
    }
    // VERSION/SIZE/TYPE/COUNT/WIDTH/HEIGHT/VIEWPOINT/POINTS are not needed
  }
  if (!data_seen) throw UnsupportedEncoding(origin + ": missing DATA header");

  int z_pos = -1, index_pos = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] == "z") z_pos = static_cast<int>(i);
    if (fields[i] == "index") index_pos = static_cast<int>(i);
  }
  if (z_pos < 0) throw MissingField(origin + ": no z field");
  if (index_pos < 0) throw MissingField(origin + ": no index field");

  const long long n_pixels = static_cast<long long>(width) * height;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> toks = split(line);
    if (static_cast<int>(toks.size()) <= std::max(z_pos, index_pos)) {
      throw MalformedLine(origin + ": point row has too few columns: '" + line + "'");
    }
    double z = 0.0, idx_raw = 0.0;
    try {
      std::size_t used = 0;
      z = std::stod(toks[z_pos], &used);
      if (used != toks[z_pos].size()) throw std::invalid_argument("trailing");
      idx_raw = std::stod(toks[index_pos], &used);
      if (used != toks[index_pos].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw MalformedLine(origin + ": non-numeric point row: '" + line + "'");
    }
    if (!std::isfinite(z) || !std::isfinite(idx_raw)) continue;  // skip holes
    const long long idx = static_cast<long long>(std::llround(idx_raw));
    if (idx < 0 || idx >= n_pixels) {
      throw IndexOutOfRange(origin + ": point index " + std::to_string(idx) +
                            " outside " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
    img.set(static_cast<int>(idx % width), static_cast<int>(idx / width), z);
  }
  return img;
}

// Reference writer used to author fixtures and persist depth as a cloud.
// Emits one row per valid pixel with the Cornell field layout.
inline std::string encode_pcd(const DepthImage& img) {
  std::size_t n = 0;
  for (const std::uint8_t v : img.valid) n += v != 0;
  std::ostringstream out;
  out << "# .PCD v0.7 - Point Cloud Data file format\n"
      << "VERSION 0.7\n"
      << "FIELDS x y z rgb index\n"
      << "SIZE 4 4 4 4 4\n"
      << "TYPE F F F F U\n"
      << "COUNT 1 1 1 1 1\n"
      << "WIDTH " << n << "\n"
      << "HEIGHT 1\n"
      << "VIEWPOINT 0 0 0 1 0 0 0\n"
      << "POINTS " << n << "\n"
      << "DATA ascii\n";
  char buf[160];
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = img.index(x, y);
      if (!img.valid[i]) continue;
      std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f 0 %lld\n", 0.001 * x,
                    0.001 * y, img.depth[i],
                    static_cast<long long>(y) * img.width + x);
      out << buf;
    }
  }
  return out.str();
}

}  // namespace graspdet
