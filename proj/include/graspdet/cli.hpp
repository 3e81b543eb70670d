#pragma once

// Operator surface. Subcommands: validate, augment, train, detect, eval,
// curve, gradcheck. Exit codes: 0 success, 2 configuration problem, 3 data
// problem, 4 failed check. All diagnostics go to standard error; artifacts
// are deterministic for a fixed config and seed.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graspdet/checkpoint.hpp"
#include "graspdet/config.hpp"
#include "graspdet/dataset.hpp"
#include "graspdet/evaluate.hpp"
#include "graspdet/gradcheck.hpp"
#include "graspdet/network.hpp"
#include "graspdet/svg.hpp"
#include "graspdet/trainer.hpp"

namespace graspdet::cli {

namespace detail {

inline std::vector<DatasetSample> load_dir(const std::string& dir, bool keep_blue) {
  std::vector<DatasetSample> samples;
  for (const SampleFiles& f : scan_dataset(dir)) {
    samples.push_back(load_sample(f.image, f.depth, f.pos, f.neg, keep_blue));
  }
  return samples;
}

inline nlohmann::json detections_json(const std::vector<Detection>& dets) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["detections"] = nlohmann::json::array();
  for (const Detection& d : dets) {
    j["detections"].push_back({{"x", d.rect.x},
                               {"y", d.rect.y},
                               {"theta", d.rect.theta},
                               {"w", d.rect.w},
                               {"h", d.rect.h},
                               {"score", d.score},
                               {"class", d.cls}});
  }
  return j;
}

inline std::vector<Detection> detections_from_json(const nlohmann::json& j,
                                                   const std::string& origin) {
  if (!j.is_object() || !j.contains("detections") || !j["detections"].is_array()) {
    throw FileError(origin + ": not a detections document");
  }
  std::vector<Detection> out;
  for (const nlohmann::json& e : j["detections"]) {
    Detection d;
    d.rect = {e.at("x").get<double>(), e.at("y").get<double>(),
              e.at("theta").get<double>(), e.at("w").get<double>(),
              e.at("h").get<double>()};
    d.score = e.at("score").get<double>();
    d.cls = e.at("class").get<int>();
    out.push_back(d);
  }
  return out;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_file(path, j.dump(2) + "\n");
}

inline std::vector<DatasetSample> pick_split(std::vector<DatasetSample> samples,
                                             const RunConfig& cfg, bool test_side,
                                             nlohmann::json* manifest) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const DatasetSample& s : samples) ids.push_back(s.id);
  const DatasetSplit split =
      split_dataset(ids, cfg.split, cfg.net.seed, cfg.train_fraction);
  if (manifest) {
    (*manifest)["split"] = cfg.split == SplitMode::kImageWise ? "image-wise" : "object-wise";
    (*manifest)["seed"] = cfg.net.seed;
    (*manifest)["train_fraction"] = cfg.train_fraction;
    (*manifest)["train"] = split.train_ids;
    (*manifest)["test"] = split.test_ids;
  }
  const std::vector<std::string>& keep = test_side ? split.test_ids : split.train_ids;
  std::vector<DatasetSample> out;
  for (DatasetSample& s : samples) {
    if (std::find(keep.begin(), keep.end(), s.id) != keep.end()) {
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline RgdImage load_detect_image(const std::string& image_path,
                                  const std::string& depth_path, bool keep_blue) {
  const NetpbmImage img = read_netpbm_file(image_path);
  if (!std::holds_alternative<RgbImage>(img)) {
    throw BadMagic(image_path + ": expected a P6 image");
  }
  const RgbImage& rgb = std::get<RgbImage>(img);
  if (depth_path.empty()) {
    RgdImage out;
    out.width = rgb.width;
    out.height = rgb.height;
    out.pixels = rgb.pixels;
    return out;
  }
  DepthImage depth;
  if (depth_path.ends_with(".pcd")) {
    depth = parse_pcd(read_file(depth_path), rgb.width, rgb.height, depth_path);
  } else {
    const NetpbmImage d = read_netpbm_file(depth_path);
    if (!std::holds_alternative<DepthImage>(d)) {
      throw BadMagic(depth_path + ": expected a P5 image");
    }
    depth = std::get<DepthImage>(d);
  }
  return compose_rgd(rgb, depth, keep_blue);
}

struct Paths {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::string metrics;
  std::string manifest;
  std::string image;
  std::string depth;
  std::string gt;
  std::string overlay;
  std::string pred;
  bool all_data = false;
  double eps = 1e-5;
  std::uint64_t seed = 20;
};

}  // namespace detail

inline int run(std::vector<std::string> args) {
  CLI::App app{"multi-object multi-grasp detection pipeline"};
  app.set_help_all_flag("--help-all");
  detail::Paths p;
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "print the default configuration JSON and exit");
  app.add_option("--config", p.config, "run configuration JSON file")
      ->envname("GRASPDET_CONFIG");

  CLI::App* validate = app.add_subcommand("validate", "parse a dataset and report counts");
  validate->add_option("--data", p.data, "dataset directory")->required();
  validate->add_option("--out", p.out, "report JSON path (stdout if omitted)");

  CLI::App* augment_cmd = app.add_subcommand("augment", "materialize augmented copies");
  augment_cmd->add_option("--data", p.data, "dataset directory")->required();
  augment_cmd->add_option("--out", p.out, "output directory")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "train the detector");
  train_cmd->add_option("--data", p.data, "dataset directory")->required();
  train_cmd->add_option("--checkpoint", p.checkpoint, "checkpoint output path")->required();
  train_cmd->add_option("--metrics", p.metrics, "metrics CSV output path");
  train_cmd->add_option("--manifest", p.manifest, "split manifest JSON output path");
  train_cmd->add_flag("--all-data", p.all_data, "train on every sample, ignoring the split");

  CLI::App* detect_cmd = app.add_subcommand("detect", "detect grasps in one image");
  detect_cmd->add_option("--image", p.image, "P6 image (RGB or pre-composed RGD)")->required();
  detect_cmd->add_option("--depth", p.depth, "P5 or PCD depth file");
  detect_cmd->add_option("--checkpoint", p.checkpoint, "checkpoint path")->required();
  detect_cmd->add_option("--out", p.out, "detections JSON output path")->required();
  detect_cmd->add_option("--overlay", p.overlay, "SVG overlay output path");
  detect_cmd->add_option("--gt", p.gt, "ground-truth rectangle file for the overlay");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval_cmd->add_option("--data", p.data, "dataset directory")->required();
  eval_cmd->add_option("--checkpoint", p.checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--out", p.out, "accuracy report JSON path")->required();
  eval_cmd->add_option("--manifest", p.manifest, "split manifest JSON output path");
  eval_cmd->add_flag("--all-data", p.all_data, "evaluate on every sample, ignoring the split");

  CLI::App* curve_cmd = app.add_subcommand("curve", "miss-rate/FPPI curve from stored detections");
  curve_cmd->add_option("--pred", p.pred, "directory of <id>.json detection files")->required();
  curve_cmd->add_option("--gt", p.gt, "directory of <id>cpos.txt ground truth")->required();
  curve_cmd->add_option("--out", p.out, "curve CSV output path")->required();

  CLI::App* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference kernel checks");
  gradcheck_cmd->add_option("--eps", p.eps, "finite-difference step");
  gradcheck_cmd->add_option("--seed", p.seed, "random seed for the probe tensors");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (print_config) {
      std::cout << default_config_json().dump(2) << "\n";
      return 0;
    }
    const RunConfig cfg = p.config.empty() ? RunConfig() : load_config_file(p.config);

    if (validate->parsed()) {
      nlohmann::json report;
      report["per_sample"] = nlohmann::json::array();
      long long positives = 0, negatives = 0, skipped = 0, dropped = 0;
      const std::vector<DatasetSample> samples =
          detail::load_dir(p.data, !cfg.net.use_depth);
      for (const DatasetSample& s : samples) {
        positives += static_cast<long long>(s.positives.size());
        negatives += static_cast<long long>(s.negatives.size());
        skipped += s.skipped_rects;
        dropped += s.dropped_rects;
        report["per_sample"].push_back({{"id", s.id},
                                        {"positives", s.positives.size()},
                                        {"negatives", s.negatives.size()},
                                        {"skipped_rects", s.skipped_rects},
                                        {"dropped_rects", s.dropped_rects}});
      }
      report["samples"] = samples.size();
      report["positives"] = positives;
      report["negatives"] = negatives;
      report["skipped_rects"] = skipped;
      report["dropped_rects"] = dropped;
      if (p.out.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        detail::write_json(p.out, report);
      }
      return 0;
    }

    if (augment_cmd->parsed()) {
      std::filesystem::create_directories(p.out);
      const std::vector<DatasetSample> samples =
          detail::load_dir(p.data, !cfg.net.use_depth);
      const Rng base(cfg.aug.seed);
      for (std::size_t si = 0; si < samples.size(); ++si) {
        for (int copy = 0; copy < cfg.aug.copies; ++copy) {
          Rng rng = base.split(si * 1000003ULL + static_cast<std::uint64_t>(copy));
          const DatasetSample out = augment_sample(samples[si], cfg.aug, rng);
          char suffix[32];
          std::snprintf(suffix, sizeof(suffix), "_a%04d", copy);
          const std::string stem =
              (std::filesystem::path(p.out) / (out.id + suffix)).string();
          RgbImage as_rgb;
          as_rgb.width = out.rgd.width;
          as_rgb.height = out.rgd.height;
          as_rgb.pixels = out.rgd.pixels;
          write_file(stem + "rgd.ppm", encode_p6(as_rgb));
          write_file(stem + "cpos.txt", encode_rect_file(out.positives));
          if (!out.negatives.empty()) {
            write_file(stem + "cneg.txt", encode_rect_file(out.negatives));
          }
        }
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      std::vector<DatasetSample> samples = detail::load_dir(p.data, !cfg.net.use_depth);
      nlohmann::json manifest;
      if (!p.all_data) {
        samples = detail::pick_split(std::move(samples), cfg, false, &manifest);
      }
      if (samples.empty()) throw EmptyDataset("no training samples in " + p.data);
      GraspNetwork net(cfg.net);
      net.init_weights(cfg.net.seed);
      const TrainLog log = train(net, samples, cfg.eval_each_epoch);
      save_checkpoint(p.checkpoint, net.params());
      if (!p.metrics.empty()) write_file(p.metrics, metrics_csv(log));
      if (!p.manifest.empty() && !p.all_data) detail::write_json(p.manifest, manifest);
      for (std::size_t e = 0; e < log.epoch_top1.size(); ++e) {
        std::cerr << "epoch " << e << " top-1 " << log.epoch_top1[e] << "\n";
      }
      if (log.skipped_samples > 0) {
        std::cerr << log.skipped_samples << " samples had no usable ground truth\n";
      }
      return 0;
    }

    if (detect_cmd->parsed()) {
      GraspNetwork net(cfg.net);
      load_checkpoint(p.checkpoint, net.params());
      const RgdImage img =
          detail::load_detect_image(p.image, p.depth, !cfg.net.use_depth);
      const std::vector<Detection> dets = net.detect(img);
      std::vector<GraspRect> gts;
      if (!p.gt.empty()) {
        for (const OrientedPolygon& poly :
             parse_rect_file(read_file(p.gt), p.gt).polygons) {
          gts.push_back(polygon_to_rect(poly));
        }
      }
      nlohmann::json out = detail::detections_json(dets);
      if (!dets.empty()) {
        // grasp the planner would take under the configured policy; the
        // object center falls back to the frame center without ground truth
        const Vec2 center = gts.empty()
                                ? Vec2{0.5 * img.width, 0.5 * img.height}
                                : gt_centroid(gts);
        const Detection pick =
            select_grasp(dets, cfg.select_policy, cfg.select_top_n, center);
        out["selected"] = {{"x", pick.rect.x},     {"y", pick.rect.y},
                           {"theta", pick.rect.theta}, {"w", pick.rect.w},
                           {"h", pick.rect.h},     {"score", pick.score},
                           {"class", pick.cls}};
      }
      detail::write_json(p.out, out);
      if (!p.overlay.empty()) {
        write_file(p.overlay, export_overlay(img.width, img.height, dets, gts));
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      std::vector<DatasetSample> samples = detail::load_dir(p.data, !cfg.net.use_depth);
      nlohmann::json manifest;
      if (!p.all_data) {
        samples = detail::pick_split(std::move(samples), cfg, true, &manifest);
      }
      if (samples.empty()) throw EmptyDataset("no evaluation samples in " + p.data);
      GraspNetwork net(cfg.net);
      load_checkpoint(p.checkpoint, net.params());
      std::vector<ImageResult> results;
      for (const DatasetSample& s : samples) {
        ImageResult r;
        r.detections = net.detect(s.rgd);
        r.gts = s.positives;
        results.push_back(std::move(r));
      }
      nlohmann::json report;
      report["split"] = cfg.split == SplitMode::kImageWise ? "image-wise" : "object-wise";
      report["jaccard_threshold"] = cfg.eval_jaccard;
      report["angle_threshold"] = cfg.eval_angle;
      report["accuracy"] = top1_accuracy(results, cfg.eval_jaccard, cfg.eval_angle);
      report["n_images"] = results.size();
      report["sweep"] = nlohmann::json::array();
      for (const auto& [t, acc] : jaccard_sweep(results, cfg.eval_sweep, cfg.eval_angle)) {
        report["sweep"].push_back({{"jaccard_threshold", t}, {"accuracy", acc}});
      }
      detail::write_json(p.out, report);
      if (!p.manifest.empty() && !p.all_data) detail::write_json(p.manifest, manifest);
      return 0;
    }

    if (curve_cmd->parsed()) {
      namespace fs = std::filesystem;
      std::vector<std::string> stems;
      for (const auto& e : fs::directory_iterator(p.pred)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
          stems.push_back(e.path().stem().string());
        }
      }
      std::sort(stems.begin(), stems.end());
      if (stems.empty()) throw EmptyDataset("no detection files in " + p.pred);
      std::vector<ImageResult> results;
      for (const std::string& stem : stems) {
        const std::string pred_path = (fs::path(p.pred) / (stem + ".json")).string();
        const std::string gt_path = (fs::path(p.gt) / (stem + "cpos.txt")).string();
        ImageResult r;
        nlohmann::json pj;
        try {
          pj = nlohmann::json::parse(read_file(pred_path));
        } catch (const nlohmann::json::exception& e) {
          throw FileError(pred_path + ": " + e.what());
        }
        r.detections = detail::detections_from_json(pj, pred_path);
        for (const OrientedPolygon& poly :
             parse_rect_file(read_file(gt_path), gt_path).polygons) {
          r.gts.push_back(polygon_to_rect(poly));
        }
        results.push_back(std::move(r));
      }
      write_file(p.out, curve_csv(fppi_curve(results, cfg.eval_jaccard, cfg.eval_angle)));
      return 0;
    }

    if (gradcheck_cmd->parsed()) {
      bool ok = true;
      std::printf("%-24s %-14s %s\n", "kernel", "max_rel_error", "status");
      for (const auto& [name, err] : kernel_gradcheck_suite(p.seed)) {
        const bool pass = err < 1e-4;
        ok = ok && pass;
        std::printf("%-24s %-14.3e %s\n", name.c_str(), err, pass ? "pass" : "FAIL");
      }
      return ok ? 0 : 4;
    }

    std::cerr << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
}

}  // namespace graspdet::cli
