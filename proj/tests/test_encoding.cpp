#include "graspdet/encoding.hpp"

#include <catch2/catch.hpp>

#include "graspdet/rng.hpp"

using namespace graspdet;

TEST_CASE("quantize_angle maps into half-open bins") {
  const AngleCodec codec;  // R = 19
  REQUIRE(quantize_angle(0.0, codec) == 1);
  REQUIRE(quantize_angle(179.9, codec) == 19);
  REQUIRE(quantize_angle(180.0 / 19.0, codec) == 2);  // exact boundary -> upper bin
  REQUIRE(quantize_angle(180.0, codec) == 1);         // wraps
  REQUIRE(quantize_angle(-1.0, codec) == 19);
}

TEST_CASE("class_to_angle returns bin centroids") {
  const AngleCodec codec;
  REQUIRE(class_to_angle(1, codec) == Approx(0.5 * 180.0 / 19.0).epsilon(1e-12));
  REQUIRE(class_to_angle(10, codec) == Approx(90.0).epsilon(1e-12));
  REQUIRE(class_to_angle(19, codec) == Approx(18.5 * 180.0 / 19.0).epsilon(1e-12));
  REQUIRE_THROWS_AS(class_to_angle(0, codec), NullClassHasNoAngle);
  REQUIRE_THROWS_AS(class_to_angle(20, codec), LabelOutOfRange);
}

TEST_CASE("quantize/decode round trip stays within half a bin") {
  const AngleCodec codec;
  const double bound = 90.0 / 19.0;
  for (double theta = 0.0; theta < 180.0; theta += 0.01) {
    const int cls = quantize_angle(theta, codec);
    REQUIRE(cls >= 1);
    REQUIRE(cls <= 19);
    REQUIRE(angle_difference(theta, class_to_angle(cls, codec)) <= bound + 1e-9);
  }
}

TEST_CASE("bins partition [0,180)") {
  const AngleCodec codec;
  // every angle maps to exactly one class, and bin edges are consistent
  for (int i = 1; i <= 19; ++i) {
    const double lo = (i - 1) * codec.bin_width();
    const double hi = i * codec.bin_width();
    REQUIRE(quantize_angle(lo, codec) == i);
    REQUIRE(quantize_angle(0.5 * (lo + hi), codec) == i);
    REQUIRE(quantize_angle(std::nextafter(hi, 0.0), codec) == i);
  }
}

TEST_CASE("generate_anchors") {
  AnchorConfig cfg;
  SECTION("14x14 grid with 9 boxes per location") {
    const auto anchors = generate_anchors(14, 14, cfg);
    REQUIRE(anchors.size() == 1764);
  }
  SECTION("single location single box") {
    AnchorConfig one;
    one.scales = {1.0};
    one.ratios = {1.0};
    one.stride = 16.0;
    const auto anchors = generate_anchors(1, 1, one);
    REQUIRE(anchors.size() == 1);
    REQUIRE(anchors[0].cx == Approx(8.0));
    REQUIRE(anchors[0].cy == Approx(8.0));
    REQUIRE(anchors[0].bw == Approx(16.0));
    REQUIRE(anchors[0].bh == Approx(16.0));
  }
  SECTION("aspect ratios preserve area") {
    const auto anchors = generate_anchors(1, 1, cfg);
    // boxes of one scale across ratios: equal area, bh/bw = ratio
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
      const double area0 = anchors[s * 3 + 0].area();
      for (std::size_t r = 0; r < 3; ++r) {
        const AxisAlignedBox& b = anchors[s * 3 + r];
        REQUIRE(b.area() == Approx(area0).margin(1e-9));
        REQUIRE(b.bh / b.bw == Approx(cfg.ratios[r]).margin(1e-9));
      }
    }
  }
}

TEST_CASE("encode/decode box deltas invert each other") {
  SECTION("identity and shifts") {
    const AxisAlignedBox a{10, 10, 8, 4};
    const auto zero = encode_box(a, a);
    REQUIRE(zero[0] == 0.0);
    REQUIRE(zero[1] == 0.0);
    REQUIRE(zero[2] == 0.0);
    REQUIRE(zero[3] == 0.0);

    const auto shifted = encode_box(a, {18, 10, 8, 4});
    REQUIRE(shifted[0] == Approx(1.0));

    const AxisAlignedBox wide = decode_box(a, {0, 0, std::log(2.0), 0});
    REQUIRE(wide.bw == Approx(16.0));
    REQUIRE(wide.bh == Approx(4.0));
  }
  SECTION("1000 random round trips within 1e-9") {
    Rng rng(55);
    for (int i = 0; i < 1000; ++i) {
      const AxisAlignedBox a{rng.uniform(10, 200), rng.uniform(10, 200),
                             rng.uniform(4, 80), rng.uniform(4, 80)};
      const AxisAlignedBox g{rng.uniform(10, 200), rng.uniform(10, 200),
                             rng.uniform(4, 80), rng.uniform(4, 80)};
      const AxisAlignedBox back = decode_box(a, encode_box(a, g));
      REQUIRE(back.cx == Approx(g.cx).margin(1e-9));
      REQUIRE(back.cy == Approx(g.cy).margin(1e-9));
      REQUIRE(back.bw == Approx(g.bw).margin(1e-9));
      REQUIRE(back.bh == Approx(g.bh).margin(1e-9));
    }
  }
}

TEST_CASE("label_anchors assigns positives, negatives and ignores") {
  SECTION("anchor identical to gt is positive with zero delta") {
    const std::vector<AxisAlignedBox> anchors{{20, 20, 10, 10}, {100, 100, 10, 10}};
    const AnchorTargets t = label_anchors(anchors, {{20, 20, 10, 10}});
    REQUIRE(t.labels[0] == AnchorLabel::kPositive);
    REQUIRE(t.deltas[0] == std::array<double, 4>{0, 0, 0, 0});
    REQUIRE(t.labels[1] == AnchorLabel::kNegative);
  }
  SECTION("max-IoU fallback keeps every overlapped gt matched") {
    // gt overlaps the anchor only slightly (IoU < neg threshold)
    const std::vector<AxisAlignedBox> anchors{{10, 10, 10, 10}};
    const AxisAlignedBox gt{17, 10, 10, 10};  // IoU = 3/17 ~ 0.176
    const AnchorTargets t = label_anchors(anchors, {gt});
    REQUIRE(t.labels[0] == AnchorLabel::kPositive);
    REQUIRE(t.matched_gt[0] == 0);
  }
  SECTION("mid-IoU anchor is ignored") {
    // IoU = 5/15 = 1/3 for a 10x10 anchor shifted 5 px: between 0.3 and 0.7
    const std::vector<AxisAlignedBox> anchors{{10, 10, 10, 10}, {15, 10, 10, 10}};
    const AnchorTargets t = label_anchors(anchors, {{10, 10, 10, 10}});
    REQUIRE(t.labels[0] == AnchorLabel::kPositive);
    REQUIRE(t.labels[1] == AnchorLabel::kIgnore);
  }
  SECTION("empty ground truth") {
    REQUIRE_THROWS_AS(label_anchors({{10, 10, 10, 10}}, {}), EmptyGroundTruth);
  }
  SECTION("property: every overlapped gt has a positive; no double labels") {
    Rng rng(67);
    AnchorConfig cfg;
    cfg.stride = 16;
    const auto anchors = generate_anchors(8, 8, cfg);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<AxisAlignedBox> gts;
      const int n = 1 + static_cast<int>(rng.uniform_index(4));
      for (int i = 0; i < n; ++i) {
        gts.push_back({rng.uniform(20, 100), rng.uniform(20, 100),
                       rng.uniform(8, 60), rng.uniform(8, 60)});
      }
      const AnchorTargets t = label_anchors(anchors, gts);
      std::vector<bool> matched(gts.size(), false);
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (t.labels[i] == AnchorLabel::kPositive) {
          REQUIRE(t.matched_gt[i] >= 0);
          matched[t.matched_gt[i]] = true;
        }
      }
      for (std::size_t g = 0; g < gts.size(); ++g) {
        bool overlapped = false;
        for (const auto& a : anchors) {
          if (box_iou(a, gts[g]) > 0.0) {
            overlapped = true;
            break;
          }
        }
        if (overlapped) {
          // some anchor claims this gt, possibly via another gt's region
          bool has_positive = false;
          for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (t.labels[i] == AnchorLabel::kPositive &&
                box_iou(anchors[i], gts[g]) > 0.0) {
              has_positive = true;
              break;
            }
          }
          REQUIRE(has_positive);
        }
      }
    }
  }
}

TEST_CASE("label_rois maps regions to orientation classes") {
  const AngleCodec codec;
  const GraspRect gt{50, 50, 47.0, 20, 12};  // class = floor(47/9.4737)+1 = 5
  SECTION("roi equal to the reset box") {
    const RoiTargets t = label_rois({{50, 50, 20, 12}}, {gt}, codec);
    REQUIRE(t.labels[0] == quantize_angle(47.0, codec));
    REQUIRE(t.deltas[0] == std::array<double, 4>{0, 0, 0, 0});
  }
  SECTION("distant roi collapses to the null class") {
    const RoiTargets t = label_rois({{150, 150, 20, 12}}, {gt}, codec);
    REQUIRE(t.labels[0] == 0);
  }
  SECTION("IoU just under the threshold is background") {
    // 20x12 roi shifted so IoU < 0.5: shift x by 7 -> inter 13*12, union 27*12
    const RoiTargets t = label_rois({{57, 50, 20, 12}}, {gt}, codec);
    REQUIRE(box_iou({57, 50, 20, 12}, {50, 50, 20, 12}) < 0.5);
    REQUIRE(t.labels[0] == 0);
  }
  SECTION("empty ground truth") {
    REQUIRE_THROWS_AS(label_rois({{10, 10, 5, 5}}, {}, codec), EmptyGroundTruth);
  }
}
