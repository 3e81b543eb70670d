#pragma once

// Target encoding shared by both detector stages: orientation quantized into
// R half-open bins with class 0 reserved for the no-grasp hypothesis, anchor
// grids over the feature map, the standard (dx, dy, dlog w, dlog h) box
// parameterization, and IoU-based label assignment.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "graspdet/errors.hpp"
#include "graspdet/geometry.hpp"

namespace graspdet {

struct AngleCodec {
  int orientation_classes = 19;  // classes 1..R; class 0 is the null class

  int total_classes() const { return orientation_classes + 1; }
  double bin_width() const { return 180.0 / orientation_classes; }
};

// Bin i covers [(i-1) * 180/R, i * 180/R); boundary angles go to the upper bin.
inline int quantize_angle(double theta_deg, const AngleCodec& codec) {
  const double theta = reduce_angle_180(theta_deg);
  int cls = static_cast<int>(std::floor(theta / codec.bin_width())) + 1;
  if (cls > codec.orientation_classes) cls = codec.orientation_classes;
  if (cls < 1) cls = 1;
  return cls;
}

// Centroid of the class interval.
inline double class_to_angle(int label, const AngleCodec& codec) {
  if (label == 0) throw NullClassHasNoAngle("class 0 carries no orientation");
  if (label < 0 || label > codec.orientation_classes) {
    throw LabelOutOfRange("class " + std::to_string(label) + " not in 1.." +
                          std::to_string(codec.orientation_classes));
  }
  return (label - 0.5) * codec.bin_width();
}

struct AnchorConfig {
  double stride = 16.0;
  std::vector<double> scales{1.5, 2.5, 4.0};   // box side = scale * stride
  std::vector<double> ratios{0.5, 1.0, 2.0};   // bh / bw at equal area

  int boxes_per_location() const {
    return static_cast<int>(scales.size() * ratios.size());
  }
};

// Grid of anchors over a feat_w x feat_h map. Index layout is
// ((y * feat_w) + x) * k + (scale_idx * n_ratios + ratio_idx), matching the
// channel layout of the proposal head outputs.
inline std::vector<AxisAlignedBox> generate_anchors(int feat_w, int feat_h,
                                                    const AnchorConfig& cfg) {
  std::vector<AxisAlignedBox> anchors;
  anchors.reserve(static_cast<std::size_t>(feat_w) * feat_h * cfg.boxes_per_location());
  for (int y = 0; y < feat_h; ++y) {
    for (int x = 0; x < feat_w; ++x) {
      const double cx = (x + 0.5) * cfg.stride;
      const double cy = (y + 0.5) * cfg.stride;
      for (const double s : cfg.scales) {
        const double side = s * cfg.stride;
        for (const double r : cfg.ratios) {
          const double bw = side / std::sqrt(r);
          const double bh = side * std::sqrt(r);
          anchors.push_back({cx, cy, bw, bh});
        }
      }
    }
  }
  return anchors;
}

inline AxisAlignedBox clip_box(const AxisAlignedBox& b, double width, double height) {
  const double x1 = std::clamp(b.x1(), 0.0, width);
  const double y1 = std::clamp(b.y1(), 0.0, height);
  const double x2 = std::clamp(b.x2(), 0.0, width);
  const double y2 = std::clamp(b.y2(), 0.0, height);
  return {0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1};
}

inline std::array<double, 4> encode_box(const AxisAlignedBox& anchor,
                                        const AxisAlignedBox& gt) {
  return {(gt.cx - anchor.cx) / anchor.bw, (gt.cy - anchor.cy) / anchor.bh,
          std::log(gt.bw / anchor.bw), std::log(gt.bh / anchor.bh)};
}

inline AxisAlignedBox decode_box(const AxisAlignedBox& anchor,
                                 const std::array<double, 4>& t) {
  // clamp the log-space sizes so a wild regression output cannot overflow
  const double dw = std::clamp(t[2], -10.0, 10.0);
  const double dh = std::clamp(t[3], -10.0, 10.0);
  return {anchor.cx + t[0] * anchor.bw, anchor.cy + t[1] * anchor.bh,
          anchor.bw * std::exp(dw), anchor.bh * std::exp(dh)};
}

enum class AnchorLabel : std::int8_t { kNegative = 0, kPositive = 1, kIgnore = -1 };

struct AnchorTargets {
  std::vector<AnchorLabel> labels;
  std::vector<std::array<double, 4>> deltas;  // valid for positives only
  std::vector<int> matched_gt;                // gt index for positives, else -1
};

// Anchor assignment: positive at IoU >= pos_iou with any ground-truth box or
// as the best anchor of a ground truth (so every overlapped gt keeps at least
// one positive); negative below neg_iou; everything else ignored.
inline AnchorTargets label_anchors(const std::vector<AxisAlignedBox>& anchors,
                                   const std::vector<AxisAlignedBox>& gt_boxes,
                                   double pos_iou = 0.7, double neg_iou = 0.3) {
  if (gt_boxes.empty()) throw EmptyGroundTruth("label_anchors requires ground truth");
  const std::size_t n = anchors.size();
  const std::size_t m = gt_boxes.size();
  AnchorTargets t;
  t.labels.assign(n, AnchorLabel::kIgnore);
  t.deltas.assign(n, {0, 0, 0, 0});
  t.matched_gt.assign(n, -1);

  std::vector<double> best_iou(n, 0.0);
  std::vector<int> best_gt(n, -1);
  std::vector<double> gt_best(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t g = 0; g < m; ++g) {
      const double v = box_iou(anchors[i], gt_boxes[g]);
      if (v > best_iou[i]) {
        best_iou[i] = v;
        best_gt[i] = static_cast<int>(g);
      }
      gt_best[g] = std::max(gt_best[g], v);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (best_iou[i] < neg_iou) t.labels[i] = AnchorLabel::kNegative;
  }
  // best-anchor fallback before the threshold rule so it is never shadowed
  for (std::size_t g = 0; g < m; ++g) {
    if (gt_best[g] <= 0.0) continue;  // gt overlaps nothing; no anchor to give
    for (std::size_t i = 0; i < n; ++i) {
      if (box_iou(anchors[i], gt_boxes[g]) == gt_best[g]) {
        t.labels[i] = AnchorLabel::kPositive;
        t.matched_gt[i] = static_cast<int>(g);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (best_iou[i] >= pos_iou) {
      t.labels[i] = AnchorLabel::kPositive;
      t.matched_gt[i] = best_gt[i];
    }
    if (t.labels[i] == AnchorLabel::kPositive && t.matched_gt[i] >= 0) {
      t.deltas[i] = encode_box(anchors[i], gt_boxes[t.matched_gt[i]]);
    }
  }
  return t;
}

struct RoiTargets {
  std::vector<int> labels;                    // 0 = background / null
  std::vector<std::array<double, 4>> deltas;  // valid when label != 0
  std::vector<int> matched_gt;
  std::vector<double> best_iou;               // against the reset boxes
};

// ROI assignment for the second stage: a region matching some ground truth
// reset box at IoU >= fg_iou takes that grasp's orientation class and a box
// delta toward the reset box; everything else collapses to class 0.
inline RoiTargets label_rois(const std::vector<AxisAlignedBox>& rois,
                             const std::vector<GraspRect>& gt_rects,
                             const AngleCodec& codec, double fg_iou = 0.5) {
  if (gt_rects.empty()) throw EmptyGroundTruth("label_rois requires ground truth");
  RoiTargets t;
  t.labels.assign(rois.size(), 0);
  t.deltas.assign(rois.size(), {0, 0, 0, 0});
  t.matched_gt.assign(rois.size(), -1);
  t.best_iou.assign(rois.size(), 0.0);
  std::vector<AxisAlignedBox> reset;
  reset.reserve(gt_rects.size());
  for (const GraspRect& g : gt_rects) reset.push_back(reset_to_axis_aligned(g));

  for (std::size_t i = 0; i < rois.size(); ++i) {
    double best = 0.0;
    int best_g = -1;
    for (std::size_t g = 0; g < reset.size(); ++g) {
      const double v = box_iou(rois[i], reset[g]);
      if (v > best) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    t.best_iou[i] = best;
    if (best_g >= 0 && best >= fg_iou) {
      t.labels[i] = quantize_angle(gt_rects[best_g].theta, codec);
      t.deltas[i] = encode_box(rois[i], reset[best_g]);
      t.matched_gt[i] = best_g;
    }
  }
  return t;
}

}  // namespace graspdet
