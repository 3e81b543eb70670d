#pragma once

// JSON run configuration covering the network, training, augmentation and
// evaluation knobs. Every key has a default; unknown keys are rejected so a
// typo cannot silently fall back. `default_config_json()` is the generated
// reference document.

#include <string>
#include <vector>

#include <json.hpp>

#include "graspdet/augment.hpp"
#include "graspdet/errors.hpp"
#include "graspdet/evaluate.hpp"
#include "graspdet/network.hpp"

namespace graspdet {

struct RunConfig {
  NetworkConfig net;
  AugmentConfig aug;
  SplitMode split = SplitMode::kImageWise;
  double train_fraction = 0.8;
  bool eval_each_epoch = true;  // per-epoch on-dataset top-1 during training
  double eval_jaccard = 0.25;
  double eval_angle = 30.0;
  std::vector<double> eval_sweep{0.25, 0.30, 0.35, 0.40};
  SelectPolicy select_policy = SelectPolicy::kTop1;
  int select_top_n = 25;
  std::string data_path;
  std::string checkpoint_path;
  std::string out_path;

  RunConfig() {
    aug.copies = 20;  // desk-scale default; the paper-scale 1000 is a knob
  }
};

inline nlohmann::json default_config_json() {
  const RunConfig d;
  nlohmann::json j;
  j["seed"] = 0;
  j["split"] = "image-wise";
  j["train_fraction"] = d.train_fraction;
  j["paths"] = {{"data", ""}, {"checkpoint", ""}, {"out", ""}};
  j["input"] = {{"size", d.net.input_size},
                {"mode", "rgd"},
                {"mean", d.net.input_mean},
                {"scale", d.net.input_scale}};
  j["network"] = {{"backbone_channels", d.net.backbone_channels},
                  {"feature_stride", d.net.feature_stride},
                  {"gpn_channels", d.net.gpn_channels},
                  {"roi_head_hidden", d.net.roi_head_hidden},
                  {"roi_grid", d.net.roi_grid}};
  j["anchors"] = {{"scales", d.net.anchors.scales}, {"ratios", d.net.anchors.ratios}};
  j["orientation_classes"] = d.net.codec.orientation_classes;
  j["loss"] = {{"lambda_gpn", d.net.lambda_gpn},
               {"lambda_gcr", d.net.lambda_gcr},
               {"smooth_l1", d.net.smooth_l1}};
  j["proposals"] = {{"pre_nms", d.net.pre_nms_keep},
                    {"post_nms_train", d.net.post_nms_train},
                    {"post_nms_infer", d.net.post_nms_infer},
                    {"nms_iou", d.net.proposal_nms_iou}};
  j["sampling"] = {{"anchor_batch", d.net.anchor_batch},
                   {"anchor_pos_fraction", d.net.anchor_pos_fraction},
                   {"roi_batch", d.net.roi_batch},
                   {"roi_fg_fraction", d.net.roi_fg_fraction},
                   {"anchor_pos_iou", d.net.anchor_pos_iou},
                   {"anchor_neg_iou", d.net.anchor_neg_iou},
                   {"roi_fg_iou", d.net.roi_fg_iou},
                   {"roi_bg_max_iou", d.net.roi_bg_max_iou}};
  j["train"] = {{"epochs", d.net.epochs},
                {"learning_rate", d.net.learning_rate},
                {"lr_decay_every", d.net.lr_decay_every},
                {"lr_decay_factor", d.net.lr_decay_factor},
                {"eval_each_epoch", d.eval_each_epoch}};
  j["detect"] = {{"score_threshold", d.net.detect_score_thresh},
                 {"nms_iou", d.net.detect_nms_iou},
                 {"max_detections", d.net.detect_max_out}};
  j["augment"] = {{"crop1", d.aug.crop1},
                  {"crop2", d.aug.crop2},
                  {"max_translate", d.aug.max_translate},
                  {"out_size", d.aug.out_size},
                  {"copies", d.aug.copies}};
  j["eval"] = {{"jaccard_threshold", d.eval_jaccard},
               {"angle_threshold", d.eval_angle},
               {"jaccard_sweep", d.eval_sweep},
               {"select_policy", "top1"},
               {"top_n", d.select_top_n}};
  return j;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& doc, const nlohmann::json& schema,
                                const std::string& prefix) {
  if (!doc.is_object()) return;
  for (const auto& [key, value] : doc.items()) {
    if (!schema.contains(key)) {
      throw ConfigError("unknown key '" + prefix + key + "'");
    }
    if (value.is_object()) reject_unknown_keys(value, schema.at(key), prefix + key + ".");
  }
}

template <typename T>
void read_into(const nlohmann::json& j, const char* section, const char* key, T& out) {
  if (!j.contains(section)) return;
  const nlohmann::json& s = j.at(section);
  if (!s.contains(key)) return;
  try {
    out = s.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_top(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, default_config_json(), "");
  RunConfig c;

  std::uint64_t seed = 0;
  detail::read_top(j, "seed", seed);
  c.net.seed = seed;
  c.aug.seed = seed;

  std::string split = "image-wise";
  detail::read_top(j, "split", split);
  if (split == "image-wise") {
    c.split = SplitMode::kImageWise;
  } else if (split == "object-wise") {
    c.split = SplitMode::kObjectWise;
  } else {
    throw ConfigError("split must be image-wise or object-wise, got '" + split + "'");
  }
  detail::read_top(j, "train_fraction", c.train_fraction);
  detail::read_into(j, "paths", "data", c.data_path);
  detail::read_into(j, "paths", "checkpoint", c.checkpoint_path);
  detail::read_into(j, "paths", "out", c.out_path);

  detail::read_into(j, "input", "size", c.net.input_size);
  std::string mode = "rgd";
  detail::read_into(j, "input", "mode", mode);
  if (mode == "rgd") {
    c.net.use_depth = true;
  } else if (mode == "rgb") {
    c.net.use_depth = false;
  } else {
    throw ConfigError("input.mode must be rgd or rgb, got '" + mode + "'");
  }
  detail::read_into(j, "input", "mean", c.net.input_mean);
  detail::read_into(j, "input", "scale", c.net.input_scale);
  if (c.net.input_scale <= 0.0) throw ConfigError("input.scale must be positive");

  detail::read_into(j, "network", "backbone_channels", c.net.backbone_channels);
  detail::read_into(j, "network", "feature_stride", c.net.feature_stride);
  detail::read_into(j, "network", "gpn_channels", c.net.gpn_channels);
  detail::read_into(j, "network", "roi_head_hidden", c.net.roi_head_hidden);
  detail::read_into(j, "network", "roi_grid", c.net.roi_grid);
  detail::read_into(j, "anchors", "scales", c.net.anchors.scales);
  detail::read_into(j, "anchors", "ratios", c.net.anchors.ratios);
  detail::read_top(j, "orientation_classes", c.net.codec.orientation_classes);
  detail::read_into(j, "loss", "lambda_gpn", c.net.lambda_gpn);
  detail::read_into(j, "loss", "lambda_gcr", c.net.lambda_gcr);
  detail::read_into(j, "loss", "smooth_l1", c.net.smooth_l1);
  detail::read_into(j, "proposals", "pre_nms", c.net.pre_nms_keep);
  detail::read_into(j, "proposals", "post_nms_train", c.net.post_nms_train);
  detail::read_into(j, "proposals", "post_nms_infer", c.net.post_nms_infer);
  detail::read_into(j, "proposals", "nms_iou", c.net.proposal_nms_iou);
  detail::read_into(j, "sampling", "anchor_batch", c.net.anchor_batch);
  detail::read_into(j, "sampling", "anchor_pos_fraction", c.net.anchor_pos_fraction);
  detail::read_into(j, "sampling", "roi_batch", c.net.roi_batch);
  detail::read_into(j, "sampling", "roi_fg_fraction", c.net.roi_fg_fraction);
  detail::read_into(j, "sampling", "anchor_pos_iou", c.net.anchor_pos_iou);
  detail::read_into(j, "sampling", "anchor_neg_iou", c.net.anchor_neg_iou);
  detail::read_into(j, "sampling", "roi_fg_iou", c.net.roi_fg_iou);
  detail::read_into(j, "sampling", "roi_bg_max_iou", c.net.roi_bg_max_iou);
  detail::read_into(j, "train", "epochs", c.net.epochs);
  detail::read_into(j, "train", "learning_rate", c.net.learning_rate);
  detail::read_into(j, "train", "lr_decay_every", c.net.lr_decay_every);
  detail::read_into(j, "train", "lr_decay_factor", c.net.lr_decay_factor);
  detail::read_into(j, "train", "eval_each_epoch", c.eval_each_epoch);
  detail::read_into(j, "detect", "score_threshold", c.net.detect_score_thresh);
  detail::read_into(j, "detect", "nms_iou", c.net.detect_nms_iou);
  detail::read_into(j, "detect", "max_detections", c.net.detect_max_out);
  detail::read_into(j, "augment", "crop1", c.aug.crop1);
  detail::read_into(j, "augment", "crop2", c.aug.crop2);
  detail::read_into(j, "augment", "max_translate", c.aug.max_translate);
  detail::read_into(j, "augment", "out_size", c.aug.out_size);
  detail::read_into(j, "augment", "copies", c.aug.copies);
  detail::read_into(j, "eval", "jaccard_threshold", c.eval_jaccard);
  detail::read_into(j, "eval", "angle_threshold", c.eval_angle);
  detail::read_into(j, "eval", "jaccard_sweep", c.eval_sweep);
  std::string policy = "top1";
  detail::read_into(j, "eval", "select_policy", policy);
  if (policy == "top1") {
    c.select_policy = SelectPolicy::kTop1;
  } else if (policy == "nearest-to-center") {
    c.select_policy = SelectPolicy::kNearestToCenter;
  } else {
    throw ConfigError("eval.select_policy must be top1 or nearest-to-center");
  }
  detail::read_into(j, "eval", "top_n", c.select_top_n);

  if (c.aug.crop2 > c.aug.crop1) throw ConfigError("augment.crop2 must be <= crop1");
  if (c.aug.out_size <= 0) throw ConfigError("augment.out_size must be positive");
  if (c.net.codec.orientation_classes < 1) {
    throw ConfigError("orientation_classes must be >= 1");
  }
  if (c.train_fraction <= 0.0 || c.train_fraction >= 1.0) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace graspdet
