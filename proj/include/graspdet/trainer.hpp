#pragma once

// End-to-end training loop: one image per iteration, both stage losses on the
// shared feature map, plain SGD with the step-decay schedule. Single-threaded
// and fully deterministic for a given seed and dataset order.

#include <cstdio>
#include <string>
#include <vector>

#include "graspdet/dataset.hpp"
#include "graspdet/losses.hpp"
#include "graspdet/network.hpp"
#include "graspdet/rng.hpp"

namespace graspdet {

struct IterationMetrics {
  int epoch = 0;
  long long iteration = 0;
  double lr = 0.0;
  double loss_gpn = 0.0;
  double loss_gcr = 0.0;
  double loss_total = 0.0;
};

struct TrainLog {
  std::vector<IterationMetrics> rows;
  std::vector<double> epoch_top1;  // on-dataset success per epoch (if enabled)
  int skipped_samples = 0;         // samples with no usable ground truth
};

inline std::string metrics_csv(const TrainLog& log) {
  std::string out = "epoch,iteration,lr,loss_gpn,loss_gcr,loss_total\n";
  char buf[160];
  for (const IterationMetrics& m : log.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%lld,%.10g,%.10g,%.10g,%.10g\n", m.epoch,
                  m.iteration, m.lr, m.loss_gpn, m.loss_gcr, m.loss_total);
    out += buf;
  }
  return out;
}

namespace detail {

// Up to batch indices, positives capped at pos_fraction of the batch,
// negatives fill the remainder. Selection order is a seeded shuffle.
inline std::vector<int> sample_anchor_batch(const AnchorTargets& targets, int batch,
                                            double pos_fraction, Rng& rng) {
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < targets.labels.size(); ++i) {
    if (targets.labels[i] == AnchorLabel::kPositive) pos.push_back(static_cast<int>(i));
    if (targets.labels[i] == AnchorLabel::kNegative) neg.push_back(static_cast<int>(i));
  }
  rng.shuffle(pos);
  rng.shuffle(neg);
  const int max_pos = static_cast<int>(batch * pos_fraction);
  if (static_cast<int>(pos.size()) > max_pos) pos.resize(max_pos);
  const int want_neg = batch - static_cast<int>(pos.size());
  if (static_cast<int>(neg.size()) > want_neg) neg.resize(want_neg);
  std::vector<int> sampled = pos;
  sampled.insert(sampled.end(), neg.begin(), neg.end());
  return sampled;
}

struct RoiBatch {
  std::vector<AxisAlignedBox> rois;
  std::vector<int> labels;
  std::vector<std::array<double, 4>> deltas;
};

inline RoiBatch sample_roi_batch(const std::vector<AxisAlignedBox>& candidates,
                                 const RoiTargets& targets, int batch,
                                 double fg_fraction, Rng& rng,
                                 double bg_max_iou = 1.0) {
  std::vector<int> fg, bg;
  for (std::size_t i = 0; i < targets.labels.size(); ++i) {
    if (targets.labels[i] != 0) {
      fg.push_back(static_cast<int>(i));
    } else if (targets.best_iou.empty() || targets.best_iou[i] < bg_max_iou) {
      // regions between bg_max_iou and the fg threshold are ambiguous at
      // coarse feature resolution; they enter neither side of the loss
      bg.push_back(static_cast<int>(i));
    }
  }
  rng.shuffle(fg);
  rng.shuffle(bg);
  const int max_fg = static_cast<int>(batch * fg_fraction);
  if (static_cast<int>(fg.size()) > max_fg) fg.resize(max_fg);
  const int want_bg = batch - static_cast<int>(fg.size());
  if (static_cast<int>(bg.size()) > want_bg) bg.resize(want_bg);
  RoiBatch out;
  for (const int i : fg) {
    out.rois.push_back(candidates[i]);
    out.labels.push_back(targets.labels[i]);
    out.deltas.push_back(targets.deltas[i]);
  }
  for (const int i : bg) {
    out.rois.push_back(candidates[i]);
    out.labels.push_back(0);
    out.deltas.push_back({0, 0, 0, 0});
  }
  return out;
}

inline std::vector<GraspRect> rects_to_input_frame(const std::vector<GraspRect>& rects,
                                                   double scale) {
  std::vector<GraspRect> out;
  out.reserve(rects.size());
  for (const GraspRect& r : rects) {
    out.push_back({r.x * scale, r.y * scale, r.theta, r.w * scale, r.h * scale});
  }
  return out;
}

}  // namespace detail

struct StepResult {
  double loss_gpn = 0.0;
  double loss_gcr = 0.0;
  double loss_total = 0.0;
  double gpn_cls = 0.0, gpn_reg = 0.0;
  double gcr_cls = 0.0, gcr_reg = 0.0;
};

// One SGD iteration on one sample. Ground truth is mapped into the network
// input frame; ground-truth reset boxes join the proposal pool so the head
// always sees well-placed regions while the proposal stage is still warming
// up.
inline StepResult train_step(GraspNetwork& net, const DatasetSample& sample,
                             double lr, Rng& rng) {
  const NetworkConfig& cfg = net.config();
  const double scale = static_cast<double>(cfg.input_size) / sample.rgd.width;
  const std::vector<GraspRect> gts =
      detail::rects_to_input_frame(sample.positives, scale);
  if (gts.empty()) throw EmptyGroundTruth("sample " + sample.id + " has no positives");
  std::vector<AxisAlignedBox> gt_boxes;
  gt_boxes.reserve(gts.size());
  for (const GraspRect& g : gts) gt_boxes.push_back(reset_to_axis_aligned(g));

  Graph g;
  ParamBinder bind(g, true);
  const Tensor input = net.input_tensor(sample.rgd);
  Node* feat = net.backbone(g, bind, input);
  const GpnOutput gpn = net.gpn_head(g, bind, feat);
  const std::vector<AxisAlignedBox> anchors =
      net.anchors_for(feat->value.dim(2), feat->value.dim(3));

  const AnchorTargets anchor_targets =
      label_anchors(anchors, gt_boxes, cfg.anchor_pos_iou, cfg.anchor_neg_iou);
  const std::vector<int> sampled = detail::sample_anchor_batch(
      anchor_targets, cfg.anchor_batch, cfg.anchor_pos_fraction, rng);
  const LossParts gpn_loss = loss_gpn(g, gpn.score_rows, gpn.delta_rows,
                                      anchor_targets, sampled, cfg.lambda_gpn,
                                      cfg.smooth_l1);

  std::vector<ScoredBox> proposals =
      net.propose(gpn.score_rows->value, gpn.delta_rows->value, anchors, true);
  std::vector<AxisAlignedBox> candidates;
  candidates.reserve(proposals.size() + 5 * gt_boxes.size());
  for (const ScoredBox& p : proposals) candidates.push_back(p.box);
  for (const AxisAlignedBox& b : gt_boxes) candidates.push_back(b);
  // jittered ground-truth boxes give the head foreground examples across the
  // whole overlap range real proposals reach, not just perfect crops
  for (const AxisAlignedBox& b : gt_boxes) {
    for (int j = 0; j < 4; ++j) {
      AxisAlignedBox jb = b;
      jb.cx += rng.uniform(-0.3, 0.3) * b.bw;
      jb.cy += rng.uniform(-0.3, 0.3) * b.bh;
      jb.bw *= std::exp(rng.uniform(-0.25, 0.25));
      jb.bh *= std::exp(rng.uniform(-0.25, 0.25));
      candidates.push_back(clip_box(jb, cfg.input_size, cfg.input_size));
    }
  }
  // plain random boxes keep the background pool from consisting solely of
  // near-miss proposals, which would teach the head to reject everything
  for (int j = 0; j < 16; ++j) {
    const double bw = rng.uniform(0.10, 0.35) * cfg.input_size;
    const double bh = rng.uniform(0.10, 0.35) * cfg.input_size;
    const double cx = rng.uniform(0.5 * bw, cfg.input_size - 0.5 * bw);
    const double cy = rng.uniform(0.5 * bh, cfg.input_size - 0.5 * bh);
    candidates.push_back({cx, cy, bw, bh});
  }
  const RoiTargets roi_targets = label_rois(candidates, gts, cfg.codec, cfg.roi_fg_iou);
  const detail::RoiBatch batch = detail::sample_roi_batch(
      candidates, roi_targets, cfg.roi_batch, cfg.roi_fg_fraction, rng,
      cfg.roi_bg_max_iou);
  if (batch.rois.empty()) throw NoSampledRois("sample " + sample.id);

  const RoiHeadOutput head = net.roi_head(g, bind, feat, batch.rois);
  const LossParts gcr_loss = loss_gcr(g, head.cls_logits, head.reg_rows,
                                      batch.labels, batch.deltas, cfg.lambda_gcr,
                                      cfg.smooth_l1);
  Node* total = loss_total(g, gpn_loss.total, gcr_loss.total);

  g.backward(total);
  net.params().zero_grads();
  bind.accumulate_grads();
  sgd_step(net.params(), lr);

  return {gpn_loss.total->value[0], gcr_loss.total->value[0], total->value[0],
          gpn_loss.cls->value[0],    gpn_loss.reg->value[0],
          gcr_loss.cls->value[0],    gcr_loss.reg->value[0]};
}

// Success of the highest-scoring detection against any ground truth.
inline double dataset_top1(GraspNetwork& net, const std::vector<DatasetSample>& samples,
                           double j_thresh = 0.25, double a_thresh = 30.0) {
  if (samples.empty()) throw EmptyDataset("dataset_top1");
  int correct = 0;
  for (const DatasetSample& s : samples) {
    const std::vector<Detection> dets = net.detect(s.rgd);
    if (dets.empty()) continue;
    for (const GraspRect& gt : s.positives) {
      if (is_correct(dets.front().rect, gt, j_thresh, a_thresh)) {
        ++correct;
        break;
      }
    }
  }
  return static_cast<double>(correct) / samples.size();
}

// Full training run. Samples without positives are skipped (counted); sample
// order reshuffles per epoch from the run seed.
inline TrainLog train(GraspNetwork& net, const std::vector<DatasetSample>& samples,
                      bool eval_each_epoch = false) {
  if (samples.empty()) throw EmptyDataset("train");
  const NetworkConfig& cfg = net.config();
  TrainLog log;
  Rng order_rng(Rng(cfg.seed).split(1).seed());
  Rng batch_rng(Rng(cfg.seed).split(2).seed());
  long long iteration = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);
    for (const int idx : order) {
      const DatasetSample& s = samples[idx];
      if (s.positives.empty()) {
        if (epoch == 0) ++log.skipped_samples;
        continue;
      }
      const double lr = lr_at(cfg.learning_rate, iteration, cfg.lr_decay_every,
                              cfg.lr_decay_factor);
      StepResult r;
      try {
        r = train_step(net, s, lr, batch_rng);
      } catch (const NonFiniteLoss& e) {
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + " iteration " +
                            std::to_string(iteration) + " sample " + s.id + ": " +
                            e.what());
      }
      log.rows.push_back({epoch, iteration, lr, r.loss_gpn, r.loss_gcr, r.loss_total});
      ++iteration;
    }
    if (eval_each_epoch) {
      log.epoch_top1.push_back(dataset_top1(net, samples));
    }
  }
  return log;
}

}  // namespace graspdet
