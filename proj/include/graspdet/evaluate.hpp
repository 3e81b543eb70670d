#pragma once

// Scoring protocols: greedy one-to-one matching under the Jaccard/angle
// criterion, top-1 accuracy, the accuracy sweep over stricter Jaccard
// thresholds, miss-rate versus false-positives-per-image, and the two
// grasp-selection policies.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "graspdet/dataset.hpp"
#include "graspdet/detection.hpp"
#include "graspdet/errors.hpp"
#include "graspdet/geometry.hpp"
#include "graspdet/rng.hpp"

namespace graspdet {

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (detection index, gt index)
  std::vector<int> false_positives;        // unmatched detection indices
  std::vector<int> missed_gts;             // unmatched gt indices
};

// Greedy in score order: each detection claims the unclaimed ground truth of
// highest Jaccard among those it is correct against; ties take the lower gt
// index. One-to-one by construction.
inline MatchResult match_detections(const std::vector<Detection>& dets,
                                    const std::vector<GraspRect>& gts,
                                    double j_thresh = 0.25, double a_thresh = 30.0) {
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });
  MatchResult r;
  std::vector<char> claimed(gts.size(), 0);
  for (const int di : order) {
    int best_g = -1;
    double best_j = -1.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi]) continue;
      if (!is_correct(dets[di].rect, gts[gi], j_thresh, a_thresh)) continue;
      const double j = jaccard_index(dets[di].rect, gts[gi]);
      if (j > best_j) {
        best_j = j;
        best_g = static_cast<int>(gi);
      }
    }
    if (best_g >= 0) {
      claimed[best_g] = 1;
      r.pairs.emplace_back(di, best_g);
    } else {
      r.false_positives.push_back(di);
    }
  }
  for (std::size_t gi = 0; gi < gts.size(); ++gi) {
    if (!claimed[gi]) r.missed_gts.push_back(static_cast<int>(gi));
  }
  return r;
}

// Per-image detections with their ground truth; the unit the protocol ops
// consume.
struct ImageResult {
  std::vector<Detection> detections;  // descending score
  std::vector<GraspRect> gts;
};

// Fraction of images whose single best detection is correct against any of
// the image's ground truths.
inline double top1_accuracy(const std::vector<ImageResult>& results,
                            double j_thresh = 0.25, double a_thresh = 30.0) {
  if (results.empty()) throw EmptyDataset("top1_accuracy");
  int correct = 0;
  for (const ImageResult& r : results) {
    if (r.detections.empty()) continue;
    const Detection* top = &r.detections.front();
    for (const Detection& d : r.detections) {
      if (d.score > top->score) top = &d;
    }
    for (const GraspRect& gt : r.gts) {
      if (is_correct(top->rect, gt, j_thresh, a_thresh)) {
        ++correct;
        break;
      }
    }
  }
  return static_cast<double>(correct) / results.size();
}

inline std::vector<std::pair<double, double>> jaccard_sweep(
    const std::vector<ImageResult>& results,
    const std::vector<double>& thresholds = {0.25, 0.30, 0.35, 0.40},
    double a_thresh = 30.0) {
  if (results.empty()) throw EmptyDataset("jaccard_sweep");
  std::vector<std::pair<double, double>> out;
  out.reserve(thresholds.size());
  for (const double t : thresholds) {
    out.emplace_back(t, top1_accuracy(results, t, a_thresh));
  }
  return out;
}

struct CurvePoint {
  double threshold = 0.0;
  double fppi = 0.0;
  double miss_rate = 0.0;
};

// Exact miss-rate/FPPI curve: the threshold grid is every distinct detection
// score plus the {0, 1} endpoints, descending. At each threshold only
// detections scoring at or above it survive.
inline std::vector<CurvePoint> fppi_curve(const std::vector<ImageResult>& results,
                                          double j_thresh = 0.25,
                                          double a_thresh = 30.0) {
  if (results.empty()) throw EmptyDataset("fppi_curve");
  std::set<double> grid{0.0, 1.0};
  long long total_gts = 0;
  for (const ImageResult& r : results) {
    for (const Detection& d : r.detections) grid.insert(d.score);
    total_gts += static_cast<long long>(r.gts.size());
  }
  std::vector<CurvePoint> curve;
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double tau = *it;
    long long fps = 0, misses = 0;
    for (const ImageResult& r : results) {
      std::vector<Detection> kept;
      for (const Detection& d : r.detections) {
        if (d.score >= tau) kept.push_back(d);
      }
      const MatchResult m = match_detections(kept, r.gts, j_thresh, a_thresh);
      fps += static_cast<long long>(m.false_positives.size());
      misses += static_cast<long long>(m.missed_gts.size());
    }
    CurvePoint p;
    p.threshold = tau;
    p.fppi = static_cast<double>(fps) / results.size();
    p.miss_rate = total_gts == 0 ? 0.0 : static_cast<double>(misses) / total_gts;
    curve.push_back(p);
  }
  return curve;
}

enum class SelectPolicy { kTop1, kNearestToCenter };

// Physical grasp selection. Top-1 takes the best score; NearestToCenter takes
// the candidate whose center is closest to the object center among the top-N
// by score, ties resolved by the higher score.
inline Detection select_grasp(const std::vector<Detection>& dets, SelectPolicy policy,
                              int top_n = 25, Vec2 object_center = {0, 0}) {
  if (dets.empty()) throw NoDetections("select_grasp");
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });
  if (policy == SelectPolicy::kTop1) return dets[order.front()];
  if (static_cast<int>(order.size()) > top_n) order.resize(top_n);
  int best = order.front();
  double best_d = 1e300;
  for (const int i : order) {
    const double dx = dets[i].rect.x - object_center.x;
    const double dy = dets[i].rect.y - object_center.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d < best_d - 1e-12 ||
        (std::abs(d - best_d) <= 1e-12 && dets[i].score > dets[best].score)) {
      best_d = d;
      best = i;
    }
  }
  return dets[best];
}

// Centroid of the ground-truth grasp centers; the desk-scale stand-in for
// the image-based object center.
inline Vec2 gt_centroid(const std::vector<GraspRect>& gts) {
  Vec2 c{0, 0};
  if (gts.empty()) return c;
  for (const GraspRect& g : gts) {
    c.x += g.x;
    c.y += g.y;
  }
  c.x /= gts.size();
  c.y /= gts.size();
  return c;
}

enum class SplitMode { kImageWise, kObjectWise };

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Deterministic seeded partition. Image-wise shuffles sample ids; object-wise
// shuffles object keys so every view of a held-out object lands in the test
// side together.
inline DatasetSplit split_dataset(const std::vector<std::string>& sample_ids,
                                  SplitMode mode, std::uint64_t seed,
                                  double train_fraction = 0.8) {
  if (sample_ids.empty()) throw EmptyDataset("split_dataset");
  DatasetSplit split;
  Rng rng(Rng(seed).split(17).seed());
  if (mode == SplitMode::kImageWise) {
    std::vector<std::string> ids = sample_ids;
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      (i < n_train ? split.train_ids : split.test_ids).push_back(ids[i]);
    }
  } else {
    std::vector<std::string> keys;
    for (const std::string& id : sample_ids) keys.push_back(object_key(id));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    rng.shuffle(keys);
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * keys.size()));
    std::set<std::string> train_keys(keys.begin(), keys.begin() + n_train);
    for (const std::string& id : sample_ids) {
      (train_keys.count(object_key(id)) ? split.train_ids : split.test_ids).push_back(id);
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "threshold,fppi,miss_rate\n";
  char buf[120];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", p.threshold, p.fppi,
                  p.miss_rate);
    out += buf;
  }
  return out;
}

}  // namespace graspdet
