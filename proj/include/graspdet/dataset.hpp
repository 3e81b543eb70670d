#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graspdet/annotations.hpp"
#include "graspdet/errors.hpp"
#include "graspdet/image.hpp"
#include "graspdet/netpbm.hpp"
#include "graspdet/pcd.hpp"

namespace graspdet {

struct DatasetSample {
  RgdImage rgd;
  std::vector<GraspRect> positives;
  std::vector<GraspRect> negatives;
  std::string id;
  int skipped_rects = 0;  // NaN groups in the annotation files
  int dropped_rects = 0;  // rects with a corner outside the image
};

namespace detail {

inline bool rect_inside_image(const GraspRect& r, int width, int height) {
  const OrientedPolygon p = rect_to_polygon(r);
  for (const Vec2& v : p) {
    if (v.x < 0.0 || v.x > width || v.y < 0.0 || v.y > height) return false;
  }
  return true;
}

inline void append_rects(const std::string& path, int width, int height,
                         std::vector<GraspRect>& out, int& skipped, int& dropped) {
  const RectFileResult parsed = parse_rect_file(read_file(path), path);
  skipped += parsed.skipped_groups;
  for (const OrientedPolygon& poly : parsed.polygons) {
    const GraspRect r = polygon_to_rect(poly);
    if (rect_inside_image(r, width, height)) {
      out.push_back(r);
    } else {
      ++dropped;
    }
  }
}

}  // namespace detail

// Assemble one sample from its on-disk parts. The image must be a P6 file;
// depth may come from a P5 file or an ASCII PCD (chosen by extension). With
// an empty depth path the P6 payload is taken as pre-composed R,G,D bytes.
// A missing negatives file yields an empty negative list.
inline DatasetSample load_sample(const std::string& image_path,
                                 const std::string& depth_path,
                                 const std::string& pos_path,
                                 const std::string& neg_path,
                                 bool keep_blue = false) {
  DatasetSample s;
  const NetpbmImage img = read_netpbm_file(image_path);
  if (!std::holds_alternative<RgbImage>(img)) {
    throw BadMagic(image_path + ": expected a P6 color image");
  }
  const RgbImage& rgb = std::get<RgbImage>(img);

  if (depth_path.empty()) {
    s.rgd.width = rgb.width;
    s.rgd.height = rgb.height;
    s.rgd.pixels = rgb.pixels;
  } else {
    DepthImage depth;
    if (depth_path.size() > 4 && depth_path.substr(depth_path.size() - 4) == ".pcd") {
      depth = parse_pcd(read_file(depth_path), rgb.width, rgb.height, depth_path);
    } else {
      const NetpbmImage d = read_netpbm_file(depth_path);
      if (!std::holds_alternative<DepthImage>(d)) {
        throw BadMagic(depth_path + ": expected a P5 gray image");
      }
      depth = std::get<DepthImage>(d);
    }
    s.rgd = compose_rgd(rgb, depth, keep_blue);
  }

  detail::append_rects(pos_path, s.rgd.width, s.rgd.height, s.positives,
                       s.skipped_rects, s.dropped_rects);
  if (!neg_path.empty() && std::filesystem::exists(neg_path)) {
    detail::append_rects(neg_path, s.rgd.width, s.rgd.height, s.negatives,
                         s.skipped_rects, s.dropped_rects);
  }
  s.id = std::filesystem::path(image_path).stem().string();
  if (s.id.size() > 1 && s.id.back() == 'r') s.id.pop_back();
  if (s.id.size() > 3 && s.id.substr(s.id.size() - 3) == "rgd") {
    s.id.resize(s.id.size() - 3);
  }
  return s;
}

struct SampleFiles {
  std::string id;
  std::string image;
  std::string depth;  // empty when the image is pre-composed RGD
  std::string pos;
  std::string neg;
};

// Scan a directory for sample stems. Two layouts are recognized:
//   <stem>r.ppm  + (<stem>d.pgm | <stem>.pcd) + <stem>cpos.txt [+ <stem>cneg.txt]
//   <stem>rgd.ppm (pre-composed)              + <stem>cpos.txt [+ <stem>cneg.txt]
inline std::vector<SampleFiles> scan_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw FileError(dir + " is not a directory");
  std::vector<SampleFiles> out;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  for (const std::string& name : names) {
    std::string stem;
    bool composed = false;
    if (name.size() > 7 && name.substr(name.size() - 7) == "rgd.ppm") {
      stem = name.substr(0, name.size() - 7);
      composed = true;
    } else if (name.size() > 5 && name.substr(name.size() - 5) == "r.ppm") {
      stem = name.substr(0, name.size() - 5);
    } else {
      continue;
    }
    SampleFiles f;
    f.id = stem;
    f.image = (fs::path(dir) / name).string();
    if (!composed) {
      const fs::path pgm = fs::path(dir) / (stem + "d.pgm");
      const fs::path pcd = fs::path(dir) / (stem + ".pcd");
      if (fs::exists(pgm)) {
        f.depth = pgm.string();
      } else if (fs::exists(pcd)) {
        f.depth = pcd.string();
      } else {
        throw FileError(dir + ": no depth file for stem '" + stem + "'");
      }
    }
    f.pos = (fs::path(dir) / (stem + "cpos.txt")).string();
    if (!fs::exists(f.pos)) throw FileError(dir + ": missing " + stem + "cpos.txt");
    const fs::path neg = fs::path(dir) / (stem + "cneg.txt");
    f.neg = fs::exists(neg) ? neg.string() : std::string();
    out.push_back(std::move(f));
  }
  return out;
}

// Object identity for object-wise splits: the stem up to the first '_'.
inline std::string object_key(const std::string& sample_id) {
  const std::size_t p = sample_id.find('_');
  return p == std::string::npos ? sample_id : sample_id.substr(0, p);
}

}  // namespace graspdet
