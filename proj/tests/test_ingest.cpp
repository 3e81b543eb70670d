#include <catch2/catch.hpp>

#include "graspdet/annotations.hpp"
#include "graspdet/dataset.hpp"
#include "graspdet/image.hpp"
#include "graspdet/netpbm.hpp"
#include "graspdet/pcd.hpp"
#include "graspdet/rng.hpp"
#include "raster_oracle.hpp"
#include "temp_dir.hpp"

using namespace graspdet;

TEST_CASE("parse_rect_file handles groups, NaN skips and errors") {
  SECTION("two valid rectangles") {
    const std::string text =
        "0 0\n2 0\n2 1\n0 1\n"
        "10.5 10\n12.5 10\n12.5 14\n10.5 14\n";
    const RectFileResult r = parse_rect_file(text);
    REQUIRE(r.polygons.size() == 2);
    REQUIRE(r.skipped_groups == 0);
    REQUIRE(r.polygons[1][0].x == Approx(10.5));
  }
  SECTION("NaN group skipped with count") {
    const std::string text = "NaN NaN\n1 0\n1 1\n0 1\n";
    const RectFileResult r = parse_rect_file(text);
    REQUIRE(r.polygons.empty());
    REQUIRE(r.skipped_groups == 1);
  }
  SECTION("five lines is a truncated group") {
    const std::string text = "0 0\n1 0\n1 1\n0 1\n5 5\n";
    REQUIRE_THROWS_AS(parse_rect_file(text), TruncatedGroup);
  }
  SECTION("non-numeric token") {
    REQUIRE_THROWS_AS(parse_rect_file("0 0\nfoo 0\n1 1\n0 1\n"), MalformedLine);
  }
  SECTION("wrong token count") {
    REQUIRE_THROWS_AS(parse_rect_file("0 0 0\n1 0\n1 1\n0 1\n"), MalformedLine);
  }
}

TEST_CASE("annotation round trip stays within 1e-6") {
  Rng rng(41);
  std::vector<GraspRect> rects;
  for (int i = 0; i < 50; ++i) {
    rects.push_back(testsupport::random_rect_in_region(rng));
  }
  const RectFileResult parsed = parse_rect_file(encode_rect_file(rects));
  REQUIRE(parsed.polygons.size() == rects.size());
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const GraspRect back = polygon_to_rect(parsed.polygons[i]);
    REQUIRE(back.x == Approx(rects[i].x).margin(1e-6));
    REQUIRE(back.y == Approx(rects[i].y).margin(1e-6));
    REQUIRE(angle_difference(back.theta, rects[i].theta) < 1e-4);
    REQUIRE(back.w == Approx(rects[i].w).margin(1e-5));
    REQUIRE(back.h == Approx(rects[i].h).margin(1e-5));
  }
}

TEST_CASE("parse_pcd places points by index") {
  SECTION("two points land at (0,0) and (1,1)") {
    const int w = 4, h = 3;
    const std::string text =
        "VERSION 0.7\nFIELDS x y z index\nSIZE 4 4 4 4\nTYPE F F F U\n"
        "COUNT 1 1 1 1\nWIDTH 2\nHEIGHT 1\nPOINTS 2\nDATA ascii\n"
        "0 0 0.75 0\n0 0 1.25 5\n";
    const DepthImage d = parse_pcd(text, w, h);
    REQUIRE(d.valid[d.index(0, 0)] == 1);
    REQUIRE(d.depth[d.index(0, 0)] == Approx(0.75));
    REQUIRE(d.valid[d.index(1, 1)] == 1);  // index 5 = (1,1) for width 4
    REQUIRE(d.depth[d.index(1, 1)] == Approx(1.25));
    int n_valid = 0;
    for (auto v : d.valid) n_valid += v;
    REQUIRE(n_valid == 2);
  }
  SECTION("writer round trip with full field set") {
    DepthImage src = DepthImage::invalid_filled(10, 10);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      src.set(i % 10, i / 10, 0.5 + 0.001 * i);
    }
    const DepthImage back = parse_pcd(encode_pcd(src), 10, 10);
    for (int i = 0; i < 100; ++i) {
      REQUIRE(back.valid[i] == 1);
      REQUIRE(back.depth[i] == Approx(src.depth[i]).margin(1e-6));
    }
  }
  SECTION("binary data rejected") {
    const std::string text = "FIELDS x y z index\nDATA binary\n";
    REQUIRE_THROWS_AS(parse_pcd(text, 4, 4), UnsupportedEncoding);
  }
  SECTION("missing fields") {
    REQUIRE_THROWS_AS(parse_pcd("FIELDS x y index\nDATA ascii\n", 4, 4), MissingField);
    REQUIRE_THROWS_AS(parse_pcd("FIELDS x y z\nDATA ascii\n", 4, 4), MissingField);
  }
  SECTION("index out of range") {
    const std::string text = "FIELDS z index\nDATA ascii\n1.0 16\n";
    REQUIRE_THROWS_AS(parse_pcd(text, 4, 4), IndexOutOfRange);
  }
}

TEST_CASE("parse_netpbm decodes binary P5/P6 only") {
  SECTION("2x2 P6") {
    std::string bytes = "P6\n2 2\n255\n";
    const std::uint8_t px[12] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    bytes.append(reinterpret_cast<const char*>(px), 12);
    const NetpbmImage img = parse_netpbm(bytes);
    REQUIRE(std::holds_alternative<RgbImage>(img));
    const RgbImage& rgb = std::get<RgbImage>(img);
    REQUIRE(rgb.width == 2);
    REQUIRE(rgb.height == 2);
    REQUIRE(rgb.at(1, 1, 2) == 12);
  }
  SECTION("2x2 P5 with 16-bit samples") {
    const std::vector<std::uint16_t> v{0, 300, 65535, 7};
    const NetpbmImage img = parse_netpbm(encode_p5_16(2, 2, v));
    REQUIRE(std::holds_alternative<DepthImage>(img));
    const DepthImage& d = std::get<DepthImage>(img);
    REQUIRE(d.depth[1] == 300.0);
    REQUIRE(d.depth[2] == 65535.0);
    REQUIRE(d.valid[0] == 0);  // zero means no reading
    REQUIRE(d.valid[3] == 1);
  }
  SECTION("ASCII P3 rejected") {
    REQUIRE_THROWS_AS(parse_netpbm("P3\n2 2\n255\n0 0 0 ..."), BadMagic);
  }
  SECTION("bad maxval") {
    REQUIRE_THROWS_AS(parse_netpbm("P6\n2 2\n1023\nxxxx"), BadMaxval);
    REQUIRE_THROWS_AS(parse_netpbm("P5\n2 2\n63\nxxxx"), BadMaxval);
  }
  SECTION("short payload") {
    REQUIRE_THROWS_AS(parse_netpbm("P6\n4 4\n255\nshort"), ShortPayload);
  }
  SECTION("P6 round trip with comments in header") {
    RgbImage img = RgbImage::filled(3, 2);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(37 * i + 5);
    }
    std::string bytes = encode_p6(img);
    bytes.insert(3, "# a comment line\n");
    const RgbImage back = std::get<RgbImage>(parse_netpbm(bytes));
    REQUIRE(back.pixels == img.pixels);
  }
}

TEST_CASE("compose_rgd normalizes depth per image") {
  SECTION("constant depth maps valid pixels to 128") {
    const RgbImage rgb = RgbImage::filled(2, 2, 9);
    DepthImage d = DepthImage::invalid_filled(2, 2);
    d.set(0, 0, 3.5);
    d.set(1, 1, 3.5);
    const RgdImage out = compose_rgd(rgb, d);
    REQUIRE(out.at(0, 0, 2) == 128);
    REQUIRE(out.at(1, 1, 2) == 128);
    REQUIRE(out.at(1, 0, 2) == 0);
    REQUIRE(out.at(0, 1, 2) == 0);
    REQUIRE(out.at(0, 0, 0) == 9);  // R untouched
  }
  SECTION("min and max map to 0 and 255") {
    const RgbImage rgb = RgbImage::filled(2, 1);
    DepthImage d = DepthImage::invalid_filled(2, 1);
    d.set(0, 0, 1.0);
    d.set(1, 0, 2.0);
    const RgdImage out = compose_rgd(rgb, d);
    REQUIRE(out.at(0, 0, 2) == 0);
    REQUIRE(out.at(1, 0, 2) == 255);
  }
  SECTION("3x3 hand fixture is byte exact") {
    RgbImage rgb = RgbImage::filled(3, 3);
    for (int i = 0; i < 27; ++i) rgb.pixels[i] = static_cast<std::uint8_t>(i);
    DepthImage d = DepthImage::invalid_filled(3, 3);
    // valid depths 2..10 step 1 except center invalid; span 8
    const double zs[9] = {2, 3, 4, 5, 0, 7, 8, 9, 10};
    for (int i = 0; i < 9; ++i) {
      if (zs[i] > 0) d.set(i % 3, i / 3, zs[i]);
    }
    const RgdImage out = compose_rgd(rgb, d);
    // D = round(255*(z-2)/8)
    const int expect[9] = {0, 32, 64, 96, 0, 159, 191, 223, 255};
    for (int i = 0; i < 9; ++i) {
      REQUIRE(static_cast<int>(out.pixels[i * 3 + 2]) == expect[i]);
      REQUIRE(out.pixels[i * 3 + 0] == rgb.pixels[i * 3 + 0]);
      REQUIRE(out.pixels[i * 3 + 1] == rgb.pixels[i * 3 + 1]);
    }
  }
  SECTION("dimension mismatch") {
    REQUIRE_THROWS_AS(
        compose_rgd(RgbImage::filled(2, 2), DepthImage::invalid_filled(3, 2)),
        DimensionMismatch);
  }
  SECTION("monotone in depth") {
    Rng rng(19);
    const RgbImage rgb = RgbImage::filled(16, 16);
    DepthImage d = DepthImage::invalid_filled(16, 16);
    for (int i = 0; i < 256; ++i) {
      if (rng.uniform() < 0.8) d.set(i % 16, i / 16, rng.uniform(0.3, 2.1));
    }
    const RgdImage out = compose_rgd(rgb, d);
    for (int i = 0; i < 256; ++i) {
      for (int j = 0; j < 256; ++j) {
        if (d.valid[i] && d.valid[j] && d.depth[i] < d.depth[j]) {
          REQUIRE(out.pixels[i * 3 + 2] <= out.pixels[j * 3 + 2]);
        }
      }
    }
  }
}

namespace {

void write_demo_sample(const testsupport::TempDir& dir, const std::string& stem,
                       const std::string& pos_text, const std::string& neg_text,
                       bool with_neg = true) {
  RgbImage rgb = RgbImage::filled(32, 32, 60);
  write_file(dir.file(stem + "r.ppm"), encode_p6(rgb));
  std::vector<std::uint16_t> depth(32 * 32);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    depth[i] = static_cast<std::uint16_t>(1000 + i);
  }
  write_file(dir.file(stem + "d.pgm"), encode_p5_16(32, 32, depth));
  write_file(dir.file(stem + "cpos.txt"), pos_text);
  if (with_neg) write_file(dir.file(stem + "cneg.txt"), neg_text);
}

}  // namespace

TEST_CASE("load_sample stitches the fixture quadruple together") {
  testsupport::TempDir dir("ingest");
  const std::string pos =
      "4 4\n10 4\n10 8\n4 8\n"
      "12 12\n20 12\n20 16\n12 16\n"
      "6 20\n14 20\n14 26\n6 26\n";
  const std::string neg = "20 20\n28 20\n28 24\n20 24\n";

  SECTION("complete quadruple") {
    write_demo_sample(dir, "obj1_001", pos, neg);
    const DatasetSample s =
        load_sample(dir.file("obj1_001r.ppm"), dir.file("obj1_001d.pgm"),
                    dir.file("obj1_001cpos.txt"), dir.file("obj1_001cneg.txt"));
    REQUIRE(s.positives.size() == 3);
    REQUIRE(s.negatives.size() == 1);
    REQUIRE(s.id == "obj1_001");
    REQUIRE(object_key(s.id) == "obj1");
    REQUIRE(s.rgd.width == 32);
  }
  SECTION("missing negatives file") {
    write_demo_sample(dir, "obj2_001", pos, "", false);
    const DatasetSample s =
        load_sample(dir.file("obj2_001r.ppm"), dir.file("obj2_001d.pgm"),
                    dir.file("obj2_001cpos.txt"), dir.file("obj2_001cneg.txt"));
    REQUIRE(s.positives.size() == 3);
    REQUIRE(s.negatives.empty());
  }
  SECTION("all-NaN positives") {
    write_demo_sample(dir, "obj3_001", "NaN NaN\nNaN NaN\nNaN NaN\nNaN NaN\n", neg);
    const DatasetSample s =
        load_sample(dir.file("obj3_001r.ppm"), dir.file("obj3_001d.pgm"),
                    dir.file("obj3_001cpos.txt"), dir.file("obj3_001cneg.txt"));
    REQUIRE(s.positives.empty());
    REQUIRE(s.skipped_rects == 1);
  }
  SECTION("out-of-bounds rect dropped and counted") {
    const std::string far = "28 28\n40 28\n40 34\n28 34\n";  // pokes outside 32x32
    write_demo_sample(dir, "obj4_001", pos + far, neg);
    const DatasetSample s =
        load_sample(dir.file("obj4_001r.ppm"), dir.file("obj4_001d.pgm"),
                    dir.file("obj4_001cpos.txt"), dir.file("obj4_001cneg.txt"));
    REQUIRE(s.positives.size() == 3);
    REQUIRE(s.dropped_rects == 1);
  }
  SECTION("scan_dataset finds stems") {
    write_demo_sample(dir, "obj5_001", pos, neg);
    write_demo_sample(dir, "obj5_002", pos, "", false);
    const std::vector<SampleFiles> files = scan_dataset(dir.path().string());
    REQUIRE(files.size() == 2);
    REQUIRE(files[0].id == "obj5_001");
    REQUIRE_FALSE(files[0].depth.empty());
    REQUIRE(files[1].neg.empty());
  }
}

TEST_CASE("parsers never crash on mutated headers") {
  // Mini fuzz pass; the acceptance suite runs the full 10k corpus.
  Rng rng(99);
  const std::string seeds[3] = {
      "P6\n4 4\n255\n" + std::string(48, 'x'),
      "VERSION 0.7\nFIELDS x y z index\nDATA ascii\n1 2 3 0\n",
      "0 0\n1 0\n1 1\n0 1\n",
  };
  for (int iter = 0; iter < 500; ++iter) {
    std::string s = seeds[iter % 3];
    const int edits = 1 + static_cast<int>(rng.uniform_index(4));
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = rng.uniform_index(s.size());
      s[pos] = static_cast<char>(rng.uniform_index(256));
    }
    try {
      (void)parse_netpbm(s);
    } catch (const Error&) {
    }
    try {
      (void)parse_pcd(s, 4, 4);
    } catch (const Error&) {
    }
    try {
      (void)parse_rect_file(s);
    } catch (const Error&) {
    }
  }
  SUCCEED("no crash");
}
