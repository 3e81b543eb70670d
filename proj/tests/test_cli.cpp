#include "graspdet/cli.hpp"

#include <catch2/catch.hpp>
#include <fstream>

#include "graspdet/svg.hpp"
#include "graspdet/synthetic.hpp"
#include "temp_dir.hpp"

using namespace graspdet;

namespace {

nlohmann::json tiny_config_json() {
  nlohmann::json j;
  j["seed"] = 3;
  j["input"] = {{"size", 64}};
  j["network"] = {{"backbone_channels", {6, 8, 8}},
                  {"gpn_channels", 16},
                  {"roi_head_hidden", 32}};
  j["anchors"] = {{"scales", {1.0, 2.0}}, {"ratios", {0.5, 1.0, 2.0}}};
  j["proposals"] = {{"post_nms_train", 24}, {"post_nms_infer", 12}};
  j["sampling"] = {{"anchor_batch", 48}, {"roi_batch", 24}};
  j["train"] = {{"epochs", 1}, {"learning_rate", 0.001}};
  j["augment"] = {{"crop1", 64}, {"crop2", 56}, {"max_translate", 4.0},
                  {"out_size", 56}, {"copies", 2}};
  return j;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config parsing") {
  SECTION("defaults document round-trips") {
    const RunConfig c = config_from_json(default_config_json());
    REQUIRE(c.net.input_size == 227);
    REQUIRE(c.net.codec.orientation_classes == 19);
    REQUIRE(c.net.learning_rate == Approx(1e-4));
    REQUIRE(c.aug.copies == 20);
  }
  SECTION("unknown keys rejected") {
    nlohmann::json j;
    j["trian"] = {{"epochs", 3}};
    REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    nlohmann::json j2;
    j2["train"] = {{"epohcs", 3}};
    REQUIRE_THROWS_AS(config_from_json(j2), ConfigError);
  }
  SECTION("bad enum values rejected") {
    nlohmann::json j;
    j["split"] = "object";
    REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
    nlohmann::json j2;
    j2["input"] = {{"mode", "bgr"}};
    REQUIRE_THROWS_AS(config_from_json(j2), ConfigError);
  }
  SECTION("partial configs keep defaults elsewhere") {
    nlohmann::json j;
    j["train"] = {{"epochs", 9}};
    const RunConfig c = config_from_json(j);
    REQUIRE(c.net.epochs == 9);
    REQUIRE(c.net.input_size == 227);
  }
}

TEST_CASE("cli exit codes") {
  SECTION("unknown flag is a usage error") {
    REQUIRE(cli::run({"validate", "--nope"}) == 2);
  }
  SECTION("missing data is a data error") {
    REQUIRE(cli::run({"validate", "--data", "/nonexistent/dir"}) == 3);
  }
  SECTION("bad config file is a config error") {
    testsupport::TempDir dir("cli_cfg");
    write_file(dir.file("bad.json"), "{ not json");
    REQUIRE(cli::run({"--config", dir.file("bad.json"), "gradcheck"}) == 2);
  }
  SECTION("gradcheck passes on an intact build") {
    REQUIRE(cli::run({"gradcheck"}) == 0);
  }
}

TEST_CASE("cli pipeline on a synthetic dataset") {
  testsupport::TempDir dir("cli_pipe");
  const std::string data = dir.file("data");
  std::filesystem::create_directories(data);
  write_bar_dataset(data, 8, 64, 51);
  write_file(dir.file("cfg.json"), tiny_config_json().dump(2));
  const std::string cfg = dir.file("cfg.json");

  SECTION("validate reports counts without touching inputs") {
    auto mtime = std::filesystem::last_write_time(data + "/bar0000_000r.ppm");
    REQUIRE(cli::run({"--config", cfg, "validate", "--data", data, "--out",
                      dir.file("report.json")}) == 0);
    const nlohmann::json report = nlohmann::json::parse(slurp(dir.file("report.json")));
    REQUIRE(report["samples"] == 8);
    REQUIRE(report["positives"] == 24);
    REQUIRE(report["skipped_rects"] == 0);
    REQUIRE(std::filesystem::last_write_time(data + "/bar0000_000r.ppm") == mtime);
  }

  SECTION("augment materializes deterministic copies") {
    const std::string out1 = dir.file("aug1");
    const std::string out2 = dir.file("aug2");
    REQUIRE(cli::run({"--config", cfg, "augment", "--data", data, "--out", out1}) == 0);
    REQUIRE(cli::run({"--config", cfg, "augment", "--data", data, "--out", out2}) == 0);
    const auto files = scan_dataset(out1);
    REQUIRE(files.size() == 16);  // 8 samples x 2 copies
    REQUIRE(slurp(files[0].image) ==
            slurp((std::filesystem::path(out2) / std::filesystem::path(files[0].image)
                                                     .filename()).string()));
    // augmented samples parse and carry labels
    const DatasetSample s = load_sample(files[0].image, "", files[0].pos, files[0].neg);
    REQUIRE(s.rgd.width == 56);
  }

  SECTION("train, detect, eval, curve") {
    const std::string ckpt = dir.file("model.ckpt");
    REQUIRE(cli::run({"--config", cfg, "train", "--data", data, "--all-data",
                      "--checkpoint", ckpt, "--metrics", dir.file("metrics.csv")}) == 0);
    REQUIRE(std::filesystem::exists(ckpt));
    const std::string metrics = slurp(dir.file("metrics.csv"));
    REQUIRE(metrics.rfind("epoch,iteration,lr,loss_gpn,loss_gcr,loss_total\n", 0) == 0);
    REQUIRE(std::count(metrics.begin(), metrics.end(), '\n') == 9);  // header + 8 rows

    REQUIRE(cli::run({"--config", cfg, "detect", "--image", data + "/bar0000_000r.ppm",
                      "--depth", data + "/bar0000_000d.pgm", "--checkpoint", ckpt,
                      "--out", dir.file("dets.json"), "--overlay", dir.file("o.svg"),
                      "--gt", data + "/bar0000_000cpos.txt"}) == 0);
    const nlohmann::json dets = nlohmann::json::parse(slurp(dir.file("dets.json")));
    REQUIRE(dets["schema_version"] == 1);
    REQUIRE(dets["detections"].is_array());
    for (const auto& d : dets["detections"]) {
      REQUIRE(d.contains("x"));
      REQUIRE(d.contains("theta"));
      REQUIRE(d["class"].get<int>() >= 1);
    }
    REQUIRE(slurp(dir.file("o.svg")).rfind("<?xml", 0) == 0);

    REQUIRE(cli::run({"--config", cfg, "eval", "--data", data, "--all-data",
                      "--checkpoint", ckpt, "--out", dir.file("report.json")}) == 0);
    const nlohmann::json report = nlohmann::json::parse(slurp(dir.file("report.json")));
    REQUIRE(report["n_images"] == 8);
    REQUIRE(report["jaccard_threshold"] == Approx(0.25));
    REQUIRE(report["sweep"].size() == 4);

    // store per-image detections, then build the curve from disk
    const std::string pred = dir.file("preds");
    std::filesystem::create_directories(pred);
    for (int i = 0; i < 8; ++i) {
      char stem[64];
      std::snprintf(stem, sizeof(stem), "bar%04d_000", i);
      REQUIRE(cli::run({"--config", cfg, "detect", "--image",
                        data + "/" + stem + "r.ppm", "--depth",
                        data + "/" + stem + "d.pgm", "--checkpoint", ckpt, "--out",
                        pred + "/" + stem + ".json"}) == 0);
    }
    REQUIRE(cli::run({"--config", cfg, "curve", "--pred", pred, "--gt", data,
                      "--out", dir.file("curve.csv")}) == 0);
    const std::string curve = slurp(dir.file("curve.csv"));
    REQUIRE(curve.rfind("threshold,fppi,miss_rate\n", 0) == 0);
  }
}

TEST_CASE("overlay export matches the golden file") {
  const std::vector<GraspRect> gts{{40, 30, 20, 24, 12}, {80, 70, 135, 30, 14}};
  const std::vector<Detection> dets{
      {{41.5, 31.0, 23.6842105263158, 25.0, 12.5}, 0.8731, 3}};
  const std::string svg = export_overlay(120, 100, dets, gts);
  REQUIRE(svg == slurp(std::string(GRASPDET_TEST_DATA) + "/overlay_golden.svg"));

  SECTION("no detections still draws the ground truth") {
    const std::string only_gt = export_overlay(120, 100, {}, gts);
    REQUIRE(only_gt.find("#2e7d32") != std::string::npos);
    REQUIRE(only_gt.find("#e53935") == std::string::npos);
  }
  SECTION("one detection yields four segments in two styles") {
    const std::string one = export_overlay(120, 100, dets, {});
    std::size_t red = 0, white = 0, pos = 0;
    while ((pos = one.find("#e53935", pos)) != std::string::npos) {
      ++red;
      ++pos;
    }
    pos = 0;
    while ((pos = one.find("#ffffff", pos)) != std::string::npos) {
      ++white;
      ++pos;
    }
    REQUIRE(red == 2);
    REQUIRE(white == 2);
  }
}
