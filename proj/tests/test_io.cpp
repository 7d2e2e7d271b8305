/******************************************************************************
 * Copyright 2026 The lanestruct Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the License);
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an AS IS BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lanestruct/io.hpp"
#include "test_support.hpp"

namespace lanestruct {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = LANESTRUCT_FIXTURE_DIR;

std::string strip_space(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  return s;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lanestruct_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LANESTRUCT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CulaneTest, VerticalThreePointLane) {
  const ImageSpec spec{590, 1640, 72};
  const CulaneParse p = parse_culane("100 590 100 580 100 570\n", spec);
  ASSERT_EQ(p.lanes.size(), 1u);
  const LanePolyline& lane = p.lanes[0];
  EXPECT_EQ(lane.first_valid(), 69);
  EXPECT_EQ(lane.last_valid(), 71);
  for (int i = 69; i <= 71; ++i) EXPECT_DOUBLE_EQ(lane.xs[i], 100.0);
  EXPECT_TRUE(parse_culane("", spec).lanes.empty());
  EXPECT_TRUE(parse_culane("\n\n", spec).lanes.empty());
}

TEST(CulaneTest, FixtureMarkersDropped) {
  const ImageSpec spec{590, 1640, 72};
  const CulaneParse p = parse_culane(read_text_file(kFixtures / "culane_sample.lines.txt"), spec);
  // Counted by hand: 10 points; 12 minus 3 markers; 8 minus 2 markers; the
  // last line keeps a single point and is skipped.
  EXPECT_EQ(p.point_counts, (std::vector<int>{10, 9, 6}));
  ASSERT_EQ(p.lanes.size(), 3u);
  EXPECT_EQ(p.warnings.size(), 1u);
  // Markers inside a lane leave a gap that is bridged linearly.
  const LanePolyline& third = p.lanes[2];
  EXPECT_NO_THROW(validate_lane(third, 72));
  for (int i = 0; i < 72; ++i) {
    const double y = spec.row_y(i);
    if (y > 540 && y < 570) EXPECT_NEAR(third.xs[i], 1131.4 + (y - 570) / -30 * (1043.2 - 1131.4), 1e-9);
  }
}

TEST(CulaneTest, ParseErrorsNameTheLine) {
  const ImageSpec spec;
  try {
    parse_culane("1 2 3 4\n1 2 3\n", spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_LS_ERROR(parse_culane("10 abc\n", spec), ErrorCode::kParseError);
  EXPECT_LS_ERROR(parse_culane("10 nan\n", spec), ErrorCode::kParseError);
}

TEST(CulaneTest, RoundTrip) {
  std::mt19937_64 rng(10);
  for (const ImageSpec spec : {ImageSpec{}, ImageSpec{590, 1640, 72}}) {
    std::vector<LanePolyline> lanes;
    // Negative x is the format's missing-point marker, so keep lanes inside.
    while (lanes.size() < 40) {
      const LanePolyline lane = test::random_lane(rng, spec);
      const auto pts = lane.points(spec.rows());
      if (std::all_of(pts.begin(), pts.end(), [&](Point2 p) { return p.x >= 0 && p.x < spec.width; })) {
        lanes.push_back(lane);
      }
    }
    const CulaneParse back = parse_culane(serialize_culane(lanes, spec), spec);
    ASSERT_EQ(back.lanes.size(), lanes.size());
    for (std::size_t k = 0; k < lanes.size(); ++k) {
      EXPECT_EQ(back.lanes[k].valid, lanes[k].valid);
      for (int i = 0; i < spec.key_points; ++i) {
        if (lanes[k].valid[i]) EXPECT_NEAR(back.lanes[k].xs[i], lanes[k].xs[i], 1e-3);
      }
    }
  }
}

TEST(TusimpleTest, ExampleRecord) {
  const TusimpleRecord r = parse_tusimple(
      R"({"lanes": [[-2, -2, 100, 101]], "h_samples": [240, 250, 260, 270], "raw_file": "a.jpg"})");
  ASSERT_EQ(r.lanes.size(), 1u);
  EXPECT_EQ(r.lanes[0].valid, (RowMask{0, 0, 1, 1}));
  EXPECT_EQ(r.lanes[0].xs[2], 100.0);
  EXPECT_EQ(r.lanes[0].xs[3], 101.0);
  EXPECT_EQ(r.h_samples, (std::vector<double>{240, 250, 260, 270}));
  EXPECT_EQ(r.raw_file, "a.jpg");
  EXPECT_TRUE(parse_tusimple(R"({"lanes": [], "h_samples": [1, 2], "raw_file": "b.jpg"})").lanes.empty());
}

TEST(TusimpleTest, FixtureRoundTrip) {
  std::string text = read_text_file(kFixtures / "tusimple_record.json");
  const TusimpleRecord r = parse_tusimple(text);
  EXPECT_EQ(r.lanes.size(), 4u);
  EXPECT_EQ(r.h_samples.size(), 56u);
  EXPECT_EQ(strip_space(serialize_tusimple(r)), strip_space(text));
}

TEST(TusimpleTest, ExtraFieldsAndFractions) {
  const std::string in =
      R"({"lanes": [[-2, 10.25, 11.5]], "h_samples": [1, 2, 3], "raw_file": "x", "run_time": 17})";
  const TusimpleRecord r = parse_tusimple(in);
  ASSERT_EQ(r.extra.size(), 1u);
  const TusimpleRecord back = parse_tusimple(serialize_tusimple(r));
  EXPECT_NEAR(back.lanes[0].xs[1], 10.25, 1e-3);
  EXPECT_NEAR(back.lanes[0].xs[2], 11.5, 1e-3);
  EXPECT_EQ(strip_space(serialize_tusimple(r)), strip_space(in));
}

TEST(TusimpleTest, Malformed) {
  EXPECT_LS_ERROR(parse_tusimple("{not json"), ErrorCode::kParseError);
  EXPECT_LS_ERROR(parse_tusimple(R"({"lanes": [[1, 2]], "h_samples": [1, 2, 3], "raw_file": "x"})"),
                  ErrorCode::kParseError);
  EXPECT_LS_ERROR(parse_tusimple(R"({"h_samples": [1], "raw_file": "x"})"), ErrorCode::kParseError);
}

TEST(JsonTest, ProposalsAndScenes) {
  std::vector<ScoredProposal> props(2);
  props[0].conf = 0.75;
  props[0].xs = {1.5, 2.5, 3.5};
  props[0].valid = {0, 1, 1};
  props[1].conf = 0.25;
  props[1].xs = {10, 20, 30};
  props[1].valid = {1, 1, 1};
  const auto back = proposals_from_json(proposals_to_json(props));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].xs, props[0].xs);
  EXPECT_EQ(back[0].valid, props[0].valid);
  EXPECT_EQ(back[1].conf, 0.25);
  EXPECT_EQ(proposals_from_json(R"({"proposals": [{"conf": 1, "xs": [1, 2]}]})")[0].valid, (RowMask{1, 1}));
  EXPECT_LS_ERROR(proposals_from_json(R"({"proposals": 3})"), ErrorCode::kParseError);

  const SyntheticScene s = generate_scene(3, ImageSpec{}, 4, 1.5);
  const SyntheticScene t = scene_from_json(scene_to_json(s));
  EXPECT_EQ(t.homography_true.h, s.homography_true.h);
  ASSERT_EQ(t.lanes.size(), s.lanes.size());
  for (std::size_t k = 0; k < s.lanes.size(); ++k) EXPECT_EQ(t.lanes[k].xs, s.lanes[k].xs);
  EXPECT_EQ(t.vp_true.x, s.vp_true.x);
  EXPECT_EQ(t.seed, s.seed);
}

TEST(JsonTest, CodesVpAndReports) {
  const ImageSpec spec;
  const std::vector<BoxLineCode> codes{encode(test::vertical_lane(spec, 100), spec)};
  const auto j = nlohmann::json::parse(codes_to_json(codes));
  ASSERT_TRUE(j.is_array());
  EXPECT_NEAR(j[0]["a"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(j[0]["c"].get<double>(), -100.0, 1e-9);

  const auto v = nlohmann::json::parse(vp_to_json({1.5, 2.5, 3}));
  EXPECT_EQ(v["x"].get<double>(), 1.5);
  EXPECT_EQ(v["support"].get<int>(), 3);

  EvalReport rep;
  rep.tp = 3;
  rep.fp = 1;
  rep.fn = 0;
  finalize_scores(rep);
  const auto r = nlohmann::json::parse(report_to_json(rep));
  for (const char* key : {"tp", "fp", "fn", "precision", "recall", "f1", "per_image"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  EXPECT_NEAR(r["f1"].get<double>(), 2 * 0.75 / 1.75, 1e-12);

  std::vector<GradCheckResult> gc{{"L_C", 1e-9, 400, 100, true}};
  const auto g = nlohmann::json::parse(gradcheck_to_json(gc));
  EXPECT_TRUE(g["passed"].get<bool>());
  EXPECT_EQ(g["checks"][0]["evaluations"].get<int>(), 400);
}

TEST(AnchorCsvTest, HeaderAndRows) {
  const AnchorSet set = generate_anchors({320, 100, 1}, AnchorParams{}, ImageSpec{});
  const std::string csv = anchors_to_csv(set);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "point_index,angle_deg,origin_x,origin_y,a,b,c");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2836);
  const std::string wide = anchors_to_csv(set, true);
  const std::string header = wide.substr(0, wide.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 6 + 72);
}

TEST(ConfigTest, DefaultsRoundTrip) {
  const Config defaults;
  const Config parsed = parse_config(config_to_text(defaults));
  EXPECT_EQ(config_to_text(parsed), config_to_text(defaults));
  const std::string schema = config_schema();
  std::istringstream keys(config_to_text(defaults));
  std::string line;
  while (std::getline(keys, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::string key = line.substr(0, line.find(' '));
    EXPECT_NE(schema.find(key), std::string::npos) << key;
  }
}

TEST(ConfigTest, ParsesValuesAndComments) {
  const Config c = parse_config(
      "# training\n"
      "train.epochs = 12   # short\n"
      "train.optimizer = gd\n"
      "anchor.w = 20\n"
      "image.height = 590\n"
      "pam.inverted = true\n"
      "\n"
      "synth.noise = 2.5\n");
  EXPECT_EQ(c.train.epochs, 12);
  EXPECT_EQ(c.train.optimizer, Optimizer::kGradientDescent);
  EXPECT_EQ(c.train.anchors.w_anchor, 20.0);
  EXPECT_EQ(c.train.spec.height, 590);
  EXPECT_TRUE(c.train.pam_inverted);
  EXPECT_EQ(c.synth.noise_px, 2.5);
}

TEST(ConfigTest, RejectionsNameTheKey) {
  auto expect_key = [](const std::string& text, const std::string& key) {
    try {
      parse_config(text).validate();
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfigError) << e.what();
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  expect_key("anchor.wdith = 40\n", "anchor.wdith");
  expect_key("anchor.w = 42\n", "anchor.w");
  expect_key("anchor.a = 180\n", "anchor.a");
  expect_key("image.key_points = 1\n", "image.key_points");
  expect_key("train.epochs = ten\n", "train.epochs");
  expect_key("train.lr = 0.1\ntrain.lr = 0.2\n", "train.lr");
  expect_key("nms.conf = -1\n", "nms.conf");
  expect_key("eval.iou = 1.5\n", "eval.iou");
  expect_key("synth.lanes = 9\n", "synth.lanes");
  expect_key("loss.lane = -1\n", "loss.lane");
  expect_key("train.optimizer = sgd\n", "train.optimizer");
  expect_key("just words\n", "line 1");
}

TEST(RenderTest, EmptyAndSingleLane) {
  const ImageSpec spec{60, 80, 7};
  const Image blank = render_overlay(60, 80, {}, spec.rows(), std::nullopt, nullptr);
  EXPECT_EQ(blank.width, 80);
  EXPECT_EQ(blank.height, 60);
  for (const Rgb& p : blank.pixels) ASSERT_EQ(p, kBackground);
  const std::string ppm = encode_ppm(blank);
  EXPECT_EQ(ppm.substr(0, 11), "P6\n80 60\n25");
  EXPECT_EQ(ppm.size(), std::string("P6\n80 60\n255\n").size() + 80 * 60 * 3);

  const std::vector<LanePolyline> lanes{test::vertical_lane(spec, 40.0)};
  const Image one = render_overlay(60, 80, lanes, spec.rows(), std::nullopt, nullptr);
  for (int y = 0; y < 60; ++y) {
    for (int x = 0; x < 80; ++x) {
      const bool in_band = std::abs(x + 0.5 - 40.0) <= 1.5;
      EXPECT_EQ(one.at(x, y), in_band ? lane_color(0) : kBackground) << x << "," << y;
    }
  }
}

TEST(RenderTest, GoldenOverlay) {
  const ImageSpec spec{120, 160, 16};
  const std::vector<LanePolyline> lanes =
      parse_culane(read_text_file(kFixtures / "overlay_scene.lines.txt"), spec).lanes;
  ASSERT_EQ(lanes.size(), 3u);
  std::vector<BoxLineCode> codes;
  for (const auto& l : lanes) codes.push_back(encode(l, spec));
  const VanishingPoint vp = approximate_vp(codes);
  const AnchorSet anchors = generate_anchors(vp, AnchorParams{20, 10, 30}, spec);
  const std::string bytes = encode_ppm(render_overlay(120, 160, lanes, spec.rows(), vp, &anchors));
  EXPECT_EQ(bytes, encode_ppm(render_overlay(120, 160, lanes, spec.rows(), vp, &anchors)));

  const fs::path golden = kFixtures / "overlay_golden.ppm";
  if (std::getenv("LANESTRUCT_UPDATE_GOLDEN")) write_text_file(golden, bytes);
  EXPECT_TRUE(read_text_file(golden) == bytes) << "overlay differs from the golden image";
}

TEST(PgmTest, Encodings) {
  Grid<std::uint8_t> g(2, 3, 0);
  g(1, 2) = 1;
  const std::string pgm = encode_pgm(g);
  EXPECT_EQ(pgm.substr(0, 11), "P5\n3 2\n255\n");
  EXPECT_EQ(static_cast<unsigned char>(pgm.back()), 255);
  Grid<double> d(1, 3, 0.0);
  d(0, 1) = 0.5;
  d(0, 2) = 7.0;
  const std::string dp = encode_pgm(d);
  EXPECT_EQ(static_cast<unsigned char>(dp[dp.size() - 2]), 128);
  EXPECT_EQ(static_cast<unsigned char>(dp.back()), 255);
}

TEST(DatasetTest, IndexAndPairing) {
  const fs::path root = scratch_dir("dataset");
  const ImageSpec spec{590, 1640, 72};
  fs::create_directories(root / "gt" / "normal");
  fs::create_directories(root / "pred" / "normal");
  const std::string lanes = "100 590 110 500 120 400\n800 590 790 500 780 400\n";
  write_text_file(root / "gt" / "normal" / "a.lines.txt", lanes);
  write_text_file(root / "gt" / "normal" / "b.lines.txt", lanes);
  write_text_file(root / "pred" / "normal" / "a.lines.txt", lanes);

  const DatasetIndex idx = index_culane(root / "gt");
  ASSERT_EQ(idx.entries.size(), 2u);
  EXPECT_EQ(idx.entries[0].category, "normal");
  EXPECT_EQ(idx.entries[0].annotation, "normal/a.lines.txt");

  std::vector<std::string> warnings;
  const auto images = load_culane_eval(root / "pred", root / "gt", spec, &warnings);
  ASSERT_EQ(images.size(), 2u);
  const EvalReport rep = match_and_score(images, spec.height, spec.width);
  EXPECT_EQ(rep.tp, 2);
  EXPECT_EQ(rep.fn, 2);
  EXPECT_EQ(rep.fp, 0);
  EXPECT_LS_ERROR(read_text_file(root / "missing.txt"), ErrorCode::kIoError);
  fs::remove_all(root);
}

TEST(DatasetTest, TusimplePairing) {
  const fs::path root = scratch_dir("tusimple");
  const std::string gt = read_text_file(kFixtures / "tusimple_record.json");
  fs::create_directories(root / "gt");
  fs::create_directories(root / "pred");
  write_text_file(root / "gt" / "labels.json", gt);
  write_text_file(root / "pred" / "out.json", gt);
  const auto preds = load_tusimple_dir(root / "pred");
  const auto gts = load_tusimple_dir(root / "gt");
  const auto images = pair_tusimple(preds, gts);
  ASSERT_EQ(images.size(), 1u);
  EXPECT_DOUBLE_EQ(tusimple_accuracy(images).accuracy, 1.0);

  TusimpleRecord shifted = parse_tusimple(gt);
  shifted.h_samples.back() += 1;
  const std::vector<TusimpleRecord> bad{shifted};
  EXPECT_LS_ERROR(pair_tusimple(bad, gts), ErrorCode::kRowGridMismatch);
  fs::remove_all(root);
}

TEST(CliTest, ExitCodes) {
  const fs::path out = scratch_dir("cli");
  const std::string culane = (kFixtures / "culane_sample.lines.txt").string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("encode " + culane + " --spec 590,1640,72 --out " + (out / "c.json").string()), 0);
  EXPECT_EQ(run_cli("vp " + culane + " --spec 590,1640,72"), 0);
  EXPECT_EQ(run_cli("encode " + (out / "missing.lines.txt").string()), 2);
  write_text_file(out / "bad.lines.txt", "1 2 3\n");
  EXPECT_EQ(run_cli("encode " + (out / "bad.lines.txt").string()), 2);
  EXPECT_EQ(run_cli("anchors --vp 320,100 --w 42"), 3);
  EXPECT_EQ(run_cli("anchors --vp 320,100 --out " + (out / "a.csv").string()), 0);
  write_text_file(out / "bad.cfg", "anchor.s = 0\n");
  EXPECT_EQ(run_cli("train --config " + (out / "bad.cfg").string() + " --out " + out.string()), 3);
  EXPECT_EQ(run_cli("train --schema"), 0);
  EXPECT_EQ(run_cli("render " + (kFixtures / "overlay_scene.lines.txt").string() +
                    " --spec 120,160,16 --out " + (out / "o.ppm").string()),
            0);
  EXPECT_TRUE(fs::exists(out / "o.ppm"));
  fs::remove_all(out);
}

}  // namespace
}  // namespace lanestruct
