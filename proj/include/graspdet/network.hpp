#pragma once

// The two-stage grasp detector at toy scale: a small stride-16 convolutional
// backbone standing in for the paper-scale residual network, a proposal head
// scoring per-anchor graspness with box deltas, ROI pooling on the shared
// feature map, and sibling orientation-classification / box-regression heads
// with per-class regression slices.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "graspdet/checkpoint.hpp"
#include "graspdet/detection.hpp"
#include "graspdet/encoding.hpp"
#include "graspdet/errors.hpp"
#include "graspdet/graph.hpp"
#include "graspdet/image.hpp"
#include "graspdet/params.hpp"
#include "graspdet/rng.hpp"

namespace graspdet {

struct NetworkConfig {
  int input_size = 227;
  std::vector<int> backbone_channels{16, 32, 32};
  int feature_stride = 16;  // four pooling stages
  int gpn_channels = 128;
  AnchorConfig anchors;
  AngleCodec codec;

  double lambda_gpn = 1.0;   // weight of the proposal regression term
  double lambda_gcr = 1.0;   // weight of the head regression term
  bool smooth_l1 = false;    // plain L1 by default

  int pre_nms_keep = 300;
  int post_nms_train = 64;
  int post_nms_infer = 32;
  double proposal_nms_iou = 0.7;

  int anchor_batch = 256;
  double anchor_pos_fraction = 0.5;  // at most 1:1 positives
  int roi_batch = 64;
  double roi_fg_fraction = 0.25;     // at most 1:3 fg:bg
  double anchor_pos_iou = 0.7;
  double anchor_neg_iou = 0.3;
  double roi_fg_iou = 0.45;
  double roi_bg_max_iou = 0.25;  // head background drawn below this overlap

  bool use_depth = true;  // compose RGD input; false keeps the blue channel
  double input_mean = 144.0;
  double input_scale = 32.0;  // divisor after mean shift; keeps features O(1)

  double detect_score_thresh = 0.05;
  double detect_nms_iou = 0.5;
  int detect_max_out = 25;

  double learning_rate = 1e-4;
  long long lr_decay_every = 10000;
  double lr_decay_factor = 0.1;
  int epochs = 5;
  std::uint64_t seed = 0;

  int roi_head_hidden = 512;
  int roi_grid = 7;
};

// Memoizes one graph leaf per parameter so shared weights accumulate
// gradients once, then hands them back to the store.
class ParamBinder {
 public:
  ParamBinder(Graph& g, bool train) : graph_(g), train_(train) {}

  Node* operator()(Param& p) {
    for (const auto& [param, node] : bound_) {
      if (param == &p) return node;
    }
    Node* n = graph_.leaf(p.value, train_);
    bound_.emplace_back(&p, n);
    return n;
  }

  void accumulate_grads() {
    for (const auto& [param, node] : bound_) {
      for (std::size_t i = 0; i < param->grad.size(); ++i) {
        param->grad[i] += node->grad[i];
      }
    }
  }

 private:
  Graph& graph_;
  bool train_;
  std::vector<std::pair<Param*, Node*>> bound_;
};

struct GpnOutput {
  Node* score_rows = nullptr;  // [A, 2] background/grasp logits per anchor
  Node* delta_rows = nullptr;  // [A, 4]
};

struct RoiHeadOutput {
  Node* cls_logits = nullptr;  // [M, R+1]
  Node* reg_rows = nullptr;    // [M, 4(R+1)], per-class slices
};

struct ScoredBox {
  AxisAlignedBox box;
  double score = 0.0;
};

class GraspNetwork {
 public:
  explicit GraspNetwork(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.backbone_channels.size() != 3) {
      throw ConfigError("backbone_channels must list 3 widths");
    }
    for (const int w : cfg_.backbone_channels) {
      if (w <= 0) throw ConfigError("backbone widths must be positive");
    }
    if (cfg_.gpn_channels <= 0 || cfg_.roi_head_hidden <= 0 || cfg_.roi_grid <= 0) {
      throw ConfigError("head widths must be positive");
    }
    if (cfg_.lambda_gpn < 0.0 || cfg_.lambda_gcr < 0.0) {
      throw ConfigError("loss weights must be non-negative");
    }
    const int c0 = cfg_.backbone_channels[0];
    const int c1 = cfg_.backbone_channels[1];
    const int c2 = cfg_.backbone_channels[2];
    const int k = cfg_.anchors.boxes_per_location();
    const int n_cls = cfg_.codec.total_classes();
    params_.add("backbone/conv1/w", {c0, 3, 3, 3});
    params_.add("backbone/conv1/b", {c0});
    params_.add("backbone/conv2/w", {c1, c0, 3, 3});
    params_.add("backbone/conv2/b", {c1});
    params_.add("backbone/conv3/w", {c2, c1, 3, 3});
    params_.add("backbone/conv3/b", {c2});
    params_.add("gpn/conv/w", {cfg_.gpn_channels, c2, 3, 3});
    params_.add("gpn/conv/b", {cfg_.gpn_channels});
    params_.add("gpn/score/w", {2 * k, cfg_.gpn_channels, 1, 1});
    params_.add("gpn/score/b", {2 * k});
    params_.add("gpn/delta/w", {4 * k, cfg_.gpn_channels, 1, 1});
    params_.add("gpn/delta/b", {4 * k});
    const int pooled = c2 * cfg_.roi_grid * cfg_.roi_grid;
    params_.add("head/fc1/w", {pooled, cfg_.roi_head_hidden});
    params_.add("head/fc1/b", {cfg_.roi_head_hidden});
    params_.add("head/cls/w", {cfg_.roi_head_hidden, n_cls});
    params_.add("head/cls/b", {n_cls});
    params_.add("head/reg/w", {cfg_.roi_head_hidden, 4 * n_cls});
    params_.add("head/reg/b", {4 * n_cls});
  }

  // He initialization for the shared layers; the freshly attached scoring and
  // regression heads start near zero so early proposals stay close to the
  // anchors.
  void init_weights(std::uint64_t seed) {
    Rng rng(seed);
    for (Param& p : params_.all()) {
      if (p.name.ends_with("/b")) {
        p.value.fill(0.0);
        continue;
      }
      double stddev;
      if (p.name == "gpn/score/w" || p.name == "head/cls/w") {
        stddev = 0.01;
      } else if (p.name == "gpn/delta/w" || p.name == "head/reg/w") {
        stddev = 0.001;
      } else {
        std::size_t fan_in = p.value.size() / p.value.dim(0);
        if (p.value.rank() == 2) fan_in = static_cast<std::size_t>(p.value.dim(0));
        stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      }
      fill_normal(p.value, rng, stddev);
    }
  }

  const NetworkConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Resize (bilinear) to the network input size and shift by the dataset
  // mean; returns [1,3,S,S]. Non-square frames would need an anisotropic
  // stretch that grasp angles do not survive, so they are rejected.
  Tensor input_tensor(const RgdImage& img) const {
    if (img.width != img.height) {
      throw DimensionMismatch("detector input must be square, got " +
                              std::to_string(img.width) + "x" +
                              std::to_string(img.height));
    }
    const int s = cfg_.input_size;
    Tensor t({1, 3, s, s});
    const double ratio = static_cast<double>(img.width) / s;
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double sx = (x + 0.5) * ratio - 0.5;
        const double sy = (y + 0.5) * ratio - 0.5;
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const double fx = sx - x0;
        const double fy = sy - y0;
        for (int c = 0; c < 3; ++c) {
          auto tap = [&](int xi, int yi) -> double {
            xi = std::clamp(xi, 0, img.width - 1);
            yi = std::clamp(yi, 0, img.height - 1);
            return img.at(xi, yi, c);
          };
          const double v = (1 - fx) * (1 - fy) * tap(x0, y0) +
                           fx * (1 - fy) * tap(x0 + 1, y0) +
                           (1 - fx) * fy * tap(x0, y0 + 1) +
                           fx * fy * tap(x0 + 1, y0 + 1);
          t.at(0, c, y, x) = (v - cfg_.input_mean) / cfg_.input_scale;
        }
      }
    }
    return t;
  }

  Node* backbone(Graph& g, ParamBinder& bind, const Tensor& input) {
    Node* x = g.leaf(input, false);
    Node* h = relu(g, conv2d(g, x, bind(*params_.find("backbone/conv1/w")),
                             bind(*params_.find("backbone/conv1/b")), 1, 1));
    h = max_pool2x2(g, h);
    h = relu(g, conv2d(g, h, bind(*params_.find("backbone/conv2/w")),
                       bind(*params_.find("backbone/conv2/b")), 1, 1));
    h = max_pool2x2(g, h);
    h = relu(g, conv2d(g, h, bind(*params_.find("backbone/conv3/w")),
                       bind(*params_.find("backbone/conv3/b")), 1, 1));
    h = max_pool2x2(g, h);
    h = max_pool2x2(g, h);
    return h;
  }

  GpnOutput gpn_head(Graph& g, ParamBinder& bind, Node* feat) {
    const int k = cfg_.anchors.boxes_per_location();
    Node* h = relu(g, conv2d(g, feat, bind(*params_.find("gpn/conv/w")),
                             bind(*params_.find("gpn/conv/b")), 1, 1));
    Node* score = conv2d(g, h, bind(*params_.find("gpn/score/w")),
                         bind(*params_.find("gpn/score/b")), 1, 0);
    Node* delta = conv2d(g, h, bind(*params_.find("gpn/delta/w")),
                         bind(*params_.find("gpn/delta/b")), 1, 0);
    return {anchor_rows(g, score, k, 2), anchor_rows(g, delta, k, 4)};
  }

  // Anchors for a feature map, pre-clipped to the input frame; the same boxes
  // are used for labeling and for decoding proposals.
  std::vector<AxisAlignedBox> anchors_for(int feat_h, int feat_w) const {
    AnchorConfig ac = cfg_.anchors;
    ac.stride = cfg_.feature_stride;
    std::vector<AxisAlignedBox> anchors = generate_anchors(feat_w, feat_h, ac);
    const double extent = cfg_.input_size;
    for (AxisAlignedBox& a : anchors) a = clip_box(a, extent, extent);
    return anchors;
  }

  // Score, decode, clip, pre-NMS trim, NMS, then pad back with the next best
  // suppressed boxes so downstream batches keep a fixed size.
  std::vector<ScoredBox> propose(const Tensor& score_rows, const Tensor& delta_rows,
                                 const std::vector<AxisAlignedBox>& anchors,
                                 bool train_mode) const {
    const int n = static_cast<int>(anchors.size());
    std::vector<ScoredBox> decoded(n);
    for (int i = 0; i < n; ++i) {
      const double z0 = score_rows.at(i, 0);
      const double z1 = score_rows.at(i, 1);
      const double m = std::max(z0, z1);
      const double p1 = std::exp(z1 - m) / (std::exp(z0 - m) + std::exp(z1 - m));
      const std::array<double, 4> t{delta_rows.at(i, 0), delta_rows.at(i, 1),
                                    delta_rows.at(i, 2), delta_rows.at(i, 3)};
      decoded[i].box = clip_box(decode_box(anchors[i], t),
                                cfg_.input_size, cfg_.input_size);
      decoded[i].score = p1;
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return decoded[a].score > decoded[b].score;
    });
    if (static_cast<int>(order.size()) > cfg_.pre_nms_keep) {
      order.resize(cfg_.pre_nms_keep);
    }
    std::vector<AxisAlignedBox> boxes;
    std::vector<double> scores;
    boxes.reserve(order.size());
    for (const int i : order) {
      boxes.push_back(decoded[i].box);
      scores.push_back(decoded[i].score);
    }
    const std::vector<int> keep = nms_boxes(boxes, scores, cfg_.proposal_nms_iou);
    const int want = train_mode ? cfg_.post_nms_train : cfg_.post_nms_infer;
    std::vector<ScoredBox> out;
    std::vector<char> taken(order.size(), 0);
    for (const int k : keep) {
      if (static_cast<int>(out.size()) >= want) break;
      out.push_back({boxes[k], scores[k]});
      taken[k] = 1;
    }
    for (std::size_t k = 0; k < order.size() && static_cast<int>(out.size()) < want; ++k) {
      if (!taken[k]) out.push_back({boxes[k], scores[k]});
    }
    return out;
  }

  RoiHeadOutput roi_head(Graph& g, ParamBinder& bind, Node* feat,
                         const std::vector<AxisAlignedBox>& rois) {
    Node* pooled = roi_pool(g, feat, rois, 1.0 / cfg_.feature_stride, cfg_.roi_grid);
    Node* flat = flatten_rows(g, pooled);
    Node* h = relu(g, affine(g, flat, bind(*params_.find("head/fc1/w")),
                             bind(*params_.find("head/fc1/b"))));
    Node* cls = affine(g, h, bind(*params_.find("head/cls/w")),
                       bind(*params_.find("head/cls/b")));
    Node* reg = affine(g, h, bind(*params_.find("head/reg/w")),
                       bind(*params_.find("head/reg/b")));
    return {cls, reg};
  }

  // Full inference: proposals, per-ROI orientation argmax with null-class
  // rejection, per-class box decode, score filter, NMS, top max_out.
  std::vector<Detection> detect(const RgdImage& img, double score_thresh,
                                int max_out) {
    const Tensor input = input_tensor(img);
    const double back_scale = static_cast<double>(img.width) / cfg_.input_size;

    Graph g;
    ParamBinder bind(g, false);
    Node* feat = backbone(g, bind, input);
    const GpnOutput gpn = gpn_head(g, bind, feat);
    const std::vector<AxisAlignedBox> anchors =
        anchors_for(feat->value.dim(2), feat->value.dim(3));
    const std::vector<ScoredBox> proposals =
        propose(gpn.score_rows->value, gpn.delta_rows->value, anchors, false);
    if (proposals.empty()) return {};

    std::vector<AxisAlignedBox> rois;
    rois.reserve(proposals.size());
    for (const ScoredBox& p : proposals) rois.push_back(p.box);
    const RoiHeadOutput head = roi_head(g, bind, feat, rois);

    const int n_cls = cfg_.codec.total_classes();
    std::vector<Detection> dets;
    std::vector<AxisAlignedBox> det_boxes;
    for (std::size_t i = 0; i < rois.size(); ++i) {
      double mx = head.cls_logits->value.at(static_cast<int>(i), 0);
      for (int c = 1; c < n_cls; ++c) {
        mx = std::max(mx, head.cls_logits->value.at(static_cast<int>(i), c));
      }
      double z = 0.0;
      int best = 0;
      double best_v = -1e300;
      for (int c = 0; c < n_cls; ++c) {
        const double v = head.cls_logits->value.at(static_cast<int>(i), c);
        z += std::exp(v - mx);
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      if (best == 0) continue;  // no orientation beats the null hypothesis
      const double score = std::exp(best_v - mx) / z;
      if (score < score_thresh) continue;
      const std::array<double, 4> t{
          head.reg_rows->value.at(static_cast<int>(i), 4 * best + 0),
          head.reg_rows->value.at(static_cast<int>(i), 4 * best + 1),
          head.reg_rows->value.at(static_cast<int>(i), 4 * best + 2),
          head.reg_rows->value.at(static_cast<int>(i), 4 * best + 3)};
      const AxisAlignedBox box =
          clip_box(decode_box(rois[i], t), cfg_.input_size, cfg_.input_size);
      if (box.bw <= 0.0 || box.bh <= 0.0) continue;
      Detection d;
      d.rect = {box.cx * back_scale, box.cy * back_scale,
                class_to_angle(best, cfg_.codec), box.bw * back_scale,
                box.bh * back_scale};
      d.score = score;
      d.cls = best;
      dets.push_back(d);
      det_boxes.push_back({d.rect.x, d.rect.y, d.rect.w, d.rect.h});
    }

    std::vector<double> scores;
    scores.reserve(dets.size());
    for (const Detection& d : dets) scores.push_back(d.score);
    const std::vector<int> keep = nms_boxes(det_boxes, scores, cfg_.detect_nms_iou);
    std::vector<Detection> out;
    for (const int k : keep) {
      if (static_cast<int>(out.size()) >= max_out) break;
      out.push_back(dets[k]);
    }
    return out;
  }

  std::vector<Detection> detect(const RgdImage& img) {
    return detect(img, cfg_.detect_score_thresh, cfg_.detect_max_out);
  }

 private:
  NetworkConfig cfg_;
  ParamStore params_;
};

}  // namespace graspdet
