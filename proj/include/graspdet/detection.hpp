#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "graspdet/geometry.hpp"

namespace graspdet {

// Scored output grasp. The class is the winning orientation bin, never the
// null class; score is that bin's softmax probability.
struct Detection {
  GraspRect rect;
  double score = 0.0;
  int cls = 0;
};

// Greedy non-maximum suppression on axis-aligned boxes. Returns the indices
// of survivors ordered by descending score (ties resolved by lower index).
inline std::vector<int> nms_boxes(const std::vector<AxisAlignedBox>& boxes,
                                  const std::vector<double>& scores,
                                  double iou_thresh) {
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<int> keep;
  std::vector<char> removed(boxes.size(), 0);
  for (const int i : order) {
    if (removed[i]) continue;
    keep.push_back(i);
    for (const int j : order) {
      if (j == i || removed[j]) continue;
      if (box_iou(boxes[i], boxes[j]) > iou_thresh) removed[j] = 1;
    }
  }
  return keep;
}

}  // namespace graspdet
