#pragma once

// The two training objectives. Proposal loss: cross entropy over sampled
// anchors plus a gated L1 term that only positive anchors contribute to.
// Head loss: cross entropy over the orientation classes (null included) plus
// a gated L1 term over the labeled class's regression slice for non-null
// regions. Classification terms average over the sampled batch; regression
// terms average over the gated subset, and are exactly zero when the gate is
// empty.

#include <array>
#include <cmath>
#include <vector>

#include "graspdet/encoding.hpp"
#include "graspdet/errors.hpp"
#include "graspdet/graph.hpp"

namespace graspdet {

struct LossParts {
  Node* total = nullptr;
  Node* cls = nullptr;
  Node* reg = nullptr;  // unweighted regression term
};

inline Node* zero_scalar(Graph& g) {
  return g.leaf(Tensor({1}), false);
}

// Per-row L1 summed over the 4 box coordinates, averaged over rows: the
// element-mean kernel times the row width.
inline Node* regression_loss(Graph& g, Node* pred, const Tensor& target, bool smooth) {
  Node* mean = smooth ? smooth_l1_loss(g, pred, target) : l1_loss(g, pred, target);
  return scale(g, mean, static_cast<double>(pred->value.dim(1)));
}

// score_rows [A,2], delta_rows [A,4]; `sampled` indexes the anchor batch.
inline LossParts loss_gpn(Graph& g, Node* score_rows, Node* delta_rows,
                          const AnchorTargets& targets,
                          const std::vector<int>& sampled, double lambda,
                          bool smooth = false) {
  if (sampled.empty()) throw NoSampledAnchors("empty anchor batch");
  std::vector<int> labels;
  std::vector<int> positives;
  labels.reserve(sampled.size());
  for (const int i : sampled) {
    const AnchorLabel l = targets.labels[static_cast<std::size_t>(i)];
    if (l == AnchorLabel::kIgnore) {
      throw NoSampledAnchors("sampled anchor " + std::to_string(i) + " is ignored");
    }
    labels.push_back(l == AnchorLabel::kPositive ? 1 : 0);
    if (l == AnchorLabel::kPositive) positives.push_back(i);
  }

  LossParts parts;
  parts.cls = softmax_cross_entropy(g, gather_rows(g, score_rows, sampled), labels);
  if (positives.empty()) {
    parts.reg = zero_scalar(g);  // the p* gate: no positives, exactly zero
    parts.total = parts.cls;
    return parts;
  }
  Tensor target({static_cast<int>(positives.size()), 4});
  for (std::size_t r = 0; r < positives.size(); ++r) {
    for (int j = 0; j < 4; ++j) {
      target.at(static_cast<int>(r), j) = targets.deltas[positives[r]][j];
    }
  }
  parts.reg = regression_loss(g, gather_rows(g, delta_rows, positives), target, smooth);
  parts.total = add(g, parts.cls, scale(g, parts.reg, lambda));
  return parts;
}

// cls_logits [M,R+1], reg_rows [M,4(R+1)]; labels/deltas are per sampled ROI.
inline LossParts loss_gcr(Graph& g, Node* cls_logits, Node* reg_rows,
                          const std::vector<int>& labels,
                          const std::vector<std::array<double, 4>>& deltas,
                          double lambda2, bool smooth = false) {
  if (labels.empty()) throw NoSampledRois("empty roi batch");
  if (cls_logits->value.dim(0) != static_cast<int>(labels.size()) ||
      reg_rows->value.dim(0) != static_cast<int>(labels.size())) {
    throw ShapeMismatch("loss_gcr: rows do not match label count");
  }

  LossParts parts;
  parts.cls = softmax_cross_entropy(g, cls_logits, labels);
  std::vector<int> fg_rows;
  std::vector<int> fg_classes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) {
      fg_rows.push_back(static_cast<int>(i));
      fg_classes.push_back(labels[i]);
    }
  }
  if (fg_rows.empty()) {
    parts.reg = zero_scalar(g);  // indicator gate: all-null batch, exactly zero
    parts.total = parts.cls;
    return parts;
  }
  Tensor target({static_cast<int>(fg_rows.size()), 4});
  for (std::size_t r = 0; r < fg_rows.size(); ++r) {
    for (int j = 0; j < 4; ++j) {
      target.at(static_cast<int>(r), j) = deltas[fg_rows[r]][j];
    }
  }
  Node* picked = gather_class_slices(g, gather_rows(g, reg_rows, fg_rows), fg_classes, 4);
  parts.reg = regression_loss(g, picked, target, smooth);
  parts.total = add(g, parts.cls, scale(g, parts.reg, lambda2));
  return parts;
}

// Plain sum of the stage losses; refuses non-finite inputs.
inline Node* loss_total(Graph& g, Node* l_gpn, Node* l_gcr) {
  if (!std::isfinite(l_gpn->value[0]) || !std::isfinite(l_gcr->value[0])) {
    throw NonFiniteLoss("gpn=" + std::to_string(l_gpn->value[0]) +
                        " gcr=" + std::to_string(l_gcr->value[0]));
  }
  return add(g, l_gpn, l_gcr);
}

}  // namespace graspdet
