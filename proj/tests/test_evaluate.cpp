#include "graspdet/evaluate.hpp"

#include <catch2/catch.hpp>

#include "raster_oracle.hpp"

using namespace graspdet;

namespace {

Detection det_of(const GraspRect& r, double score, int cls = 5) {
  return {r, score, cls};
}

// Scene with gts and a mix of near-correct and spurious detections.
ImageResult random_scene(Rng& rng) {
  ImageResult r;
  const int n_gt = 1 + static_cast<int>(rng.uniform_index(4));
  for (int i = 0; i < n_gt; ++i) {
    r.gts.push_back(testsupport::random_rect_in_region(rng, 40.0, 160.0));
  }
  const int n_det = static_cast<int>(rng.uniform_index(7));
  for (int i = 0; i < n_det; ++i) {
    GraspRect base = r.gts[rng.uniform_index(r.gts.size())];
    if (rng.uniform() < 0.5) {
      base.x += rng.uniform(-4, 4);
      base.y += rng.uniform(-4, 4);
      base.theta = reduce_angle_180(base.theta + rng.uniform(-20, 20));
    } else {
      base = testsupport::random_rect_in_region(rng, 40.0, 160.0);
    }
    r.detections.push_back(det_of(base, rng.uniform()));
  }
  std::stable_sort(r.detections.begin(), r.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return r;
}

}  // namespace

TEST_CASE("match_detections basics") {
  const GraspRect gt{50, 50, 30, 20, 10};
  SECTION("one correct detection pairs up") {
    const MatchResult m = match_detections({det_of(gt, 0.9)}, {gt});
    REQUIRE(m.pairs.size() == 1);
    REQUIRE(m.false_positives.empty());
    REQUIRE(m.missed_gts.empty());
  }
  SECTION("two detections on one gt leave one false positive") {
    GraspRect near = gt;
    near.x += 2;
    const MatchResult m =
        match_detections({det_of(gt, 0.9), det_of(near, 0.8)}, {gt});
    REQUIRE(m.pairs.size() == 1);
    REQUIRE(m.pairs[0].first == 0);  // higher score claims it
    REQUIRE(m.false_positives == std::vector<int>{1});
  }
  SECTION("no detections means all gts missed") {
    const MatchResult m = match_detections({}, {gt, gt, gt});
    REQUIRE(m.missed_gts.size() == 3);
  }
  SECTION("boundary: jaccard exactly 0.25 does not match") {
    const GraspRect big{50, 50, 0, 2, 2};
    const GraspRect small{50, 50, 0, 1, 1};
    REQUIRE(jaccard_index(big, small) == 0.25);
    const MatchResult m = match_detections({det_of(small, 0.9, 1)}, {big});
    REQUIRE(m.pairs.empty());
    REQUIRE(m.false_positives.size() == 1);
    REQUIRE(m.missed_gts.size() == 1);
  }
  SECTION("boundary: angle difference exactly 30 matches") {
    GraspRect rot = gt;
    rot.theta = reduce_angle_180(gt.theta + 30.0);
    const MatchResult m = match_detections({det_of(rot, 0.9)}, {gt});
    REQUIRE(m.pairs.size() == 1);
  }
  SECTION("books balance on random scenes") {
    Rng rng(71);
    for (int trial = 0; trial < 100; ++trial) {
      const ImageResult scene = random_scene(rng);
      const MatchResult m = match_detections(scene.detections, scene.gts);
      REQUIRE(m.pairs.size() + m.false_positives.size() == scene.detections.size());
      REQUIRE(m.pairs.size() + m.missed_gts.size() == scene.gts.size());
      std::set<int> seen_d, seen_g;
      for (const auto& [d, g] : m.pairs) {
        REQUIRE(seen_d.insert(d).second);
        REQUIRE(seen_g.insert(g).second);
      }
    }
  }
}

TEST_CASE("top1_accuracy") {
  const GraspRect gt{60, 60, 45, 24, 12};
  SECTION("perfect top detections everywhere") {
    std::vector<ImageResult> results(4);
    for (auto& r : results) {
      r.gts = {gt};
      r.detections = {det_of(gt, 0.8)};
    }
    REQUIRE(top1_accuracy(results) == 1.0);
  }
  SECTION("no detections anywhere") {
    std::vector<ImageResult> results(3);
    for (auto& r : results) r.gts = {gt};
    REQUIRE(top1_accuracy(results) == 0.0);
  }
  SECTION("only the highest-score detection counts") {
    ImageResult r;
    r.gts = {gt};
    GraspRect far{150, 150, 0, 10, 10};
    r.detections = {det_of(far, 0.9), det_of(gt, 0.5)};  // top one is wrong
    REQUIRE(top1_accuracy({r}) == 0.0);
  }
  SECTION("empty dataset") {
    REQUIRE_THROWS_AS(top1_accuracy({}), EmptyDataset);
  }
}

TEST_CASE("jaccard_sweep is monotone non-increasing") {
  SECTION("perfect detections stay at 1.0") {
    const GraspRect gt{60, 60, 45, 24, 12};
    std::vector<ImageResult> results(3);
    for (auto& r : results) {
      r.gts = {gt};
      r.detections = {det_of(gt, 0.9)};
    }
    for (const auto& [t, acc] : jaccard_sweep(results)) {
      REQUIRE(acc == 1.0);
    }
  }
  SECTION("random scenes") {
    Rng rng(73);
    std::vector<ImageResult> results;
    for (int i = 0; i < 40; ++i) results.push_back(random_scene(rng));
    const auto sweep = jaccard_sweep(results);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      REQUIRE(sweep[i].second <= sweep[i - 1].second + 1e-12);
    }
  }
}

TEST_CASE("fppi_curve") {
  const GraspRect gt{60, 60, 45, 24, 12};
  SECTION("threshold above every score: no detections, full miss rate") {
    std::vector<ImageResult> results(2);
    for (auto& r : results) {
      r.gts = {gt};
      r.detections = {det_of(gt, 0.4)};
    }
    const auto curve = fppi_curve(results);
    REQUIRE(curve.front().threshold == 1.0);
    REQUIRE(curve.front().fppi == 0.0);
    REQUIRE(curve.front().miss_rate == 1.0);
    // at threshold 0 the perfect detections cover everything
    REQUIRE(curve.back().threshold == 0.0);
    REQUIRE(curve.back().miss_rate == 0.0);
    REQUIRE(curve.back().fppi == 0.0);
  }
  SECTION("monotone counts over the sweep on random scenes") {
    Rng rng(79);
    std::vector<ImageResult> results;
    for (int i = 0; i < 100; ++i) results.push_back(random_scene(rng));
    const auto curve = fppi_curve(results);
    REQUIRE(curve.front().threshold == 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      REQUIRE(curve[i].threshold < curve[i - 1].threshold);
      REQUIRE(curve[i].fppi >= curve[i - 1].fppi - 1e-12);
      REQUIRE(curve[i].miss_rate <= curve[i - 1].miss_rate + 1e-12);
    }
  }
  SECTION("csv header and rows") {
    std::vector<ImageResult> results(1);
    results[0].gts = {gt};
    results[0].detections = {det_of(gt, 0.5)};
    const std::string csv = curve_csv(fppi_curve(results));
    REQUIRE(csv.rfind("threshold,fppi,miss_rate\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 grid rows
  }
}

TEST_CASE("select_grasp policies") {
  const GraspRect a{100, 100, 0, 20, 10};   // near center, low score
  const GraspRect b{150, 150, 90, 20, 10};  // far, high score
  const std::vector<Detection> dets{det_of(b, 0.9), det_of(a, 0.5)};
  const Vec2 center{100, 100};

  SECTION("single detection satisfies both policies") {
    const std::vector<Detection> one{det_of(a, 0.7)};
    REQUIRE(select_grasp(one, SelectPolicy::kTop1).score == 0.7);
    REQUIRE(select_grasp(one, SelectPolicy::kNearestToCenter, 25, center).score == 0.7);
  }
  SECTION("nearest-to-center prefers the close candidate inside top-N") {
    REQUIRE(select_grasp(dets, SelectPolicy::kTop1).score == 0.9);
    const Detection picked =
        select_grasp(dets, SelectPolicy::kNearestToCenter, 25, center);
    REQUIRE(picked.score == 0.5);
  }
  SECTION("N = 1 degenerates to top-1") {
    const Detection picked =
        select_grasp(dets, SelectPolicy::kNearestToCenter, 1, center);
    REQUIRE(picked.score == 0.9);
  }
  SECTION("no detections") {
    REQUIRE_THROWS_AS(select_grasp({}, SelectPolicy::kTop1), NoDetections);
  }
}

TEST_CASE("split_dataset") {
  std::vector<std::string> ids;
  for (int obj = 0; obj < 10; ++obj) {
    for (int view = 0; view < 4; ++view) {
      ids.push_back("obj" + std::to_string(obj) + "_" + std::to_string(view));
    }
  }
  SECTION("image-wise is deterministic and complete") {
    const DatasetSplit a = split_dataset(ids, SplitMode::kImageWise, 9);
    const DatasetSplit b = split_dataset(ids, SplitMode::kImageWise, 9);
    REQUIRE(a.train_ids == b.train_ids);
    REQUIRE(a.test_ids == b.test_ids);
    REQUIRE(a.train_ids.size() + a.test_ids.size() == ids.size());
    REQUIRE(a.train_ids.size() == 32);  // 0.8 * 40
  }
  SECTION("object-wise keeps all views of an object together") {
    const DatasetSplit s = split_dataset(ids, SplitMode::kObjectWise, 9);
    std::set<std::string> train_objs, test_objs;
    for (const auto& id : s.train_ids) train_objs.insert(object_key(id));
    for (const auto& id : s.test_ids) test_objs.insert(object_key(id));
    for (const auto& k : test_objs) {
      REQUIRE(train_objs.count(k) == 0);
    }
    REQUIRE(train_objs.size() == 8);
    REQUIRE(test_objs.size() == 2);
  }
  SECTION("different seeds differ") {
    const DatasetSplit a = split_dataset(ids, SplitMode::kImageWise, 1);
    const DatasetSplit b = split_dataset(ids, SplitMode::kImageWise, 2);
    REQUIRE(a.test_ids != b.test_ids);
  }
}

TEST_CASE("gt_centroid") {
  REQUIRE(gt_centroid({{10, 20, 0, 2, 2}, {30, 40, 0, 2, 2}}).x == Approx(20.0));
  REQUIRE(gt_centroid({{10, 20, 0, 2, 2}, {30, 40, 0, 2, 2}}).y == Approx(30.0));
}
