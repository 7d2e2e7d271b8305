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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lanestruct/anchoring.hpp"
#include "lanestruct/trainer.hpp"
#include "test_support.hpp"

namespace lanestruct {
namespace {

// Total-least-squares direction through the points, then distance of q.
double distance_to_fitted_line(const std::vector<Point2>& pts, Point2 q) {
  Point2 m;
  for (const Point2& p : pts) m = m + p;
  m = (1.0 / pts.size()) * m;
  double sxx = 0, sxy = 0, syy = 0;
  for (const Point2& p : pts) {
    sxx += (p.x - m.x) * (p.x - m.x);
    sxy += (p.x - m.x) * (p.y - m.y);
    syy += (p.y - m.y) * (p.y - m.y);
  }
  const double ang = 0.5 * std::atan2(2 * sxy, sxx - syy);
  const Point2 d{std::cos(ang), std::sin(ang)};
  return std::abs(cross(d, q - m));
}

double bilinear_oracle(const FeatureGrid& f, double gx, double gy, int ch) {
  gx = std::clamp(gx, 0.0, f.cols - 1.0);
  gy = std::clamp(gy, 0.0, f.rows - 1.0);
  const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
  const int x1 = std::min(x0 + 1, f.cols - 1), y1 = std::min(y0 + 1, f.rows - 1);
  const double tx = gx - x0, ty = gy - y0;
  return (1 - ty) * ((1 - tx) * f.at(y0, x0, ch) + tx * f.at(y0, x1, ch)) +
         ty * ((1 - tx) * f.at(y1, x0, ch) + tx * f.at(y1, x1, ch));
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 30;
  return c;
}

TEST(SceneTest, SameSeedSameScene) {
  const ImageSpec spec;
  const SyntheticScene a = generate_scene(77, spec, 5, 2.0);
  const SyntheticScene b = generate_scene(77, spec, 5, 2.0);
  EXPECT_EQ(a.homography_true.h, b.homography_true.h);
  ASSERT_EQ(a.lanes.size(), b.lanes.size());
  for (std::size_t k = 0; k < a.lanes.size(); ++k) {
    EXPECT_EQ(a.lanes[k].xs, b.lanes[k].xs);
    EXPECT_EQ(a.lanes[k].valid, b.lanes[k].valid);
  }
  EXPECT_EQ(a.ground_offsets, b.ground_offsets);
  EXPECT_NE(generate_scene(78, spec, 5, 2.0).homography_true.h, a.homography_true.h);
}

TEST(SceneTest, LanesMeetAtVanishingPoint) {
  const ImageSpec spec;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SyntheticScene s = generate_scene(seed, spec, 2 + seed % 7, 0.0);
    ASSERT_EQ(s.lanes.size(), 2 + seed % 7);
    const int first = first_visible_row(s.vp_true.y, spec);
    for (const LanePolyline& lane : s.lanes) {
      EXPECT_NO_THROW(validate_lane(lane, spec.key_points));
      EXPECT_GE(lane.first_valid(), first);
      for (int i = 0; i < spec.key_points; ++i) {
        if (!lane.valid[i]) continue;
        EXPECT_GE(lane.xs[i], 0.0);
        EXPECT_LE(lane.xs[i], spec.width - 1.0);
      }
      EXPECT_LT(distance_to_fitted_line(lane.points(spec.rows()), {s.vp_true.x, s.vp_true.y}), 1.0);
    }
  }
}

TEST(SceneTest, ApproximateVpNearTruth) {
  const ImageSpec spec;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const SyntheticScene s = generate_scene(seed, spec, 4, 0.0);
    std::vector<BoxLineCode> codes;
    for (const auto& l : s.lanes) codes.push_back(encode(l, spec));
    const VanishingPoint vp = approximate_vp(codes);
    EXPECT_LT(std::hypot(vp.x - s.vp_true.x, vp.y - s.vp_true.y), 3.0) << "seed " << seed;
  }
}

TEST(SceneTest, RejectsBadArguments) {
  const ImageSpec spec;
  EXPECT_LS_ERROR(generate_scene(1, spec, 1, 0.0), ErrorCode::kInvalidArgument);
  EXPECT_LS_ERROR(generate_scene(1, spec, 9, 0.0), ErrorCode::kInvalidArgument);
  EXPECT_LS_ERROR(generate_scene(1, spec, 4, -1.0), ErrorCode::kInvalidArgument);
}

TEST(SceneTest, NoiseStaysClamped) {
  const ImageSpec spec;
  const SyntheticScene clean = generate_scene(5, spec, 4, 0.0);
  const SyntheticScene noisy = generate_scene(5, spec, 4, 3.0);
  double moved = 0;
  for (std::size_t k = 0; k < clean.lanes.size(); ++k) {
    EXPECT_EQ(clean.lanes[k].valid, noisy.lanes[k].valid);
    for (int i = 0; i < spec.key_points; ++i) {
      if (!noisy.lanes[k].valid[i]) continue;
      moved = std::max(moved, std::abs(noisy.lanes[k].xs[i] - clean.lanes[k].xs[i]));
      EXPECT_GE(noisy.lanes[k].xs[i], 0.0);
      EXPECT_LE(noisy.lanes[k].xs[i], spec.width - 1.0);
    }
  }
  EXPECT_GT(moved, 0.0);
}

TEST(DescriptorTest, ConstantAndRampGrids) {
  const ImageSpec spec;
  const int scale = 4;
  const AnchorSet set = generate_anchors({320, 100, 1}, AnchorParams{}, spec);
  FeatureGrid constant(90, 160, 2);
  std::fill(constant.data.begin(), constant.data.end(), 0.75);
  FeatureGrid ramp(90, 160, 1);
  for (int r = 0; r < 90; ++r) {
    for (int c = 0; c < 160; ++c) ramp.at(r, c, 0) = (c + 0.5) * scale;
  }
  for (std::size_t a = 0; a < set.size(); a += 97) {
    const Anchor& anchor = set.anchors[a];
    const auto d = extract_descriptor(constant, anchor, spec, scale);
    ASSERT_EQ(d.size(), 144u);
    for (double v : d) EXPECT_DOUBLE_EQ(v, 0.75);
    const auto x = extract_descriptor(ramp, anchor, spec, scale);
    for (int i = 0; i < spec.key_points; ++i) {
      const double sx = anchor.sampled_xs[i];
      const double expect = std::clamp(sx, 0.5 * scale, spec.width - 0.5 * scale);
      EXPECT_NEAR(x[i], expect, 1e-9);
    }
  }
}

TEST(DescriptorTest, RandomGridMatchesBilinear) {
  const ImageSpec spec;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  FeatureGrid f(45, 80, 3);
  for (double& v : f.data) v = u(rng);
  const AnchorSet set = generate_anchors({290, 130, 1}, AnchorParams{}, spec);
  for (std::size_t a = 0; a < set.size(); a += 53) {
    const Anchor& anchor = set.anchors[a];
    const auto d = extract_descriptor(f, anchor, spec, 8);
    for (int i = 0; i < spec.key_points; ++i) {
      for (int ch = 0; ch < 3; ++ch) {
        const double o = bilinear_oracle(f, anchor.sampled_xs[i] / 8 - 0.5, spec.row_y(i) / 8 - 0.5, ch);
        EXPECT_NEAR(d[i * 3 + ch], o, 1e-12);
      }
    }
  }
}

TEST(FeatureTest, ChannelsAndModulation) {
  const ImageSpec spec;
  const SyntheticScene s = generate_scene(3, spec, 4, 0.0);
  const FeatureGrid f = scene_features(s.lanes, spec);
  ASSERT_EQ(f.channels, kFeatureChannels);
  ASSERT_EQ(f.rows, 90);
  ASSERT_EQ(f.cols, 160);
  for (int r = 0; r < f.rows; r += 7) {
    for (int c = 0; c < f.cols; c += 5) {
      const double m = f.at(r, c, 2) / 2.0;  // mask, doubled where set
      ASSERT_TRUE(m == 0.0 || m == 1.0);
      EXPECT_NEAR(f.at(r, c, 0), (c + 0.5) * 4 / spec.width * (1 + m), 1e-12);
      EXPECT_NEAR(f.at(r, c, 1), (r + 0.5) * 4 / spec.height * (1 + m), 1e-12);
      EXPECT_NEAR(f.at(r, c, 3), 1 + m, 1e-12);
    }
  }
}

TEST(IdentifiabilityTest, TargetsDecodeToLanes) {
  const ImageSpec spec;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SyntheticScene s = generate_scene(seed, spec, 4, 0.0);
    const AnchorSet set = generate_anchors(s.vp_true, AnchorParams{}, spec);
    const AnchorTargets t = assign_targets(set, s.lanes);
    for (std::size_t g = 0; g < s.lanes.size(); ++g) {
      const int a = t.anchor_of_gt[g];
      ASSERT_GE(a, 0);
      EXPECT_EQ(t.valid[a], s.lanes[g].valid);
      for (int i = 0; i < spec.key_points; ++i) {
        if (!s.lanes[g].valid[i]) continue;
        EXPECT_NEAR(set.anchors[a].sampled_xs[i] + t.gdx[a][i], s.lanes[g].xs[i], 1e-9);
      }
    }
  }
}

TEST(TrainTest, ZeroLearningRateKeepsParameters) {
  const ImageSpec spec;
  const std::vector<SyntheticScene> scenes{generate_scene(2, spec, 3, 0.0)};
  TrainConfig c = small_config();
  c.epochs = 0;
  const ScorerParams init = train(scenes, c).params;
  c.epochs = 6;
  c.lr = 0.0;
  for (Optimizer opt : {Optimizer::kAdam, Optimizer::kGradientDescent}) {
    c.optimizer = opt;
    const TrainResult r = train(scenes, c);
    EXPECT_EQ(r.params.weight, init.weight);
    EXPECT_EQ(r.params.bias, init.bias);
    for (const auto& e : r.log.epochs) EXPECT_EQ(e.total, r.log.epochs.front().total);
  }
}

TEST(TrainTest, BitIdenticalLogs) {
  const ImageSpec spec;
  const std::vector<SyntheticScene> scenes{generate_scene(4, spec, 4, 1.0), generate_scene(5, spec, 3, 1.0)};
  const TrainConfig c = small_config();
  const TrainResult a = train(scenes, c), b = train(scenes, c);
  std::ostringstream la, lb;
  write_log_csv(a.log, la);
  write_log_csv(b.log, lb);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_EQ(a.params.weight, b.params.weight);
  EXPECT_EQ(la.str().substr(0, la.str().find('\n')), "epoch,L_V,L_C,L_R,L_P,L_L,L_I,total");
  EXPECT_LT(a.log.epochs.back().total, a.log.epochs.front().total);
}

TEST(TrainTest, ScorerGradientFlow) {
  const ImageSpec spec;
  const std::vector<SyntheticScene> scenes{generate_scene(6, spec, 4, 1.0), generate_scene(7, spec, 5, 1.0)};
  TrainConfig c = small_config();
  const TrainingProblem problem(scenes, c);
  c.epochs = 0;
  c.init_std = 0.05;
  const ScorerParams init = train(scenes, c).params;
  EXPECT_LT(scorer_gradient_check(problem, init, 40, 1), 1e-3);
  c.epochs = 40;
  const ScorerParams trained = train(scenes, c).params;
  EXPECT_LT(scorer_gradient_check(problem, trained, 40, 2), 1e-3);
}

TEST(TrainTest, DroppingStructureTermsDoesNotHelpRegression) {
  const ImageSpec spec;
  std::vector<SyntheticScene> scenes;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) scenes.push_back(generate_scene(seed, spec, 4, 2.0));
  TrainConfig full;
  full.optimizer = Optimizer::kGradientDescent;
  full.lr = 1e-5;
  full.epochs = 150;
  TrainConfig ablated = full;
  ablated.weights.lane = 0.0;
  ablated.weights.image = 0.0;
  const double lr_full = train(scenes, full).log.epochs.back().l_r;
  const double lr_ablated = train(scenes, ablated).log.epochs.back().l_r;
  EXPECT_GE(lr_ablated, lr_full);
}

TEST(TrainTest, DivergenceIsReported) {
  const ImageSpec spec;
  const std::vector<SyntheticScene> scenes{generate_scene(2, spec, 3, 0.0)};
  TrainConfig c = small_config();
  c.optimizer = Optimizer::kGradientDescent;
  c.lr = 1e300;
  EXPECT_LS_ERROR(train(scenes, c), ErrorCode::kDivergedTraining);
}

TEST(TrainTest, ConfigValidationNamesKeys) {
  TrainConfig c;
  c.ignore_radius_px = 1.0;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
    EXPECT_NE(std::string(e.what()).find("train.ignore_radius"), std::string::npos);
  }
}

TEST(ParamsTest, BlobRoundTrip) {
  ScorerParams p(12, 5);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (double& w : p.weight) w = n(rng);
  for (double& b : p.bias) b = n(rng);
  std::stringstream ss;
  write_params(p, ss);
  const ScorerParams q = read_params(ss);
  EXPECT_EQ(q.descriptor_dim, 12);
  EXPECT_EQ(q.outputs, 6);
  EXPECT_EQ(q.weight, p.weight);
  EXPECT_EQ(q.bias, p.bias);

  std::string blob;
  {
    std::ostringstream o;
    write_params(p, o);
    blob = o.str();
  }
  EXPECT_EQ(blob.substr(0, 8), "LSTRPARM");
  std::istringstream bad_magic("XXXXXXXX" + blob.substr(8));
  EXPECT_LS_ERROR(read_params(bad_magic), ErrorCode::kParseError);
  std::istringstream truncated(blob.substr(0, blob.size() - 3));
  EXPECT_LS_ERROR(read_params(truncated), ErrorCode::kParseError);
}

TEST(InferenceTest, ProposalsStayInsideImage) {
  const ImageSpec spec;
  const std::vector<SyntheticScene> scenes{generate_scene(12, spec, 4, 0.0)};
  TrainConfig c = small_config();
  c.epochs = 60;
  const TrainResult r = train(scenes, c);
  const PreparedScene ps = prepare_scene(scenes[0], c);
  const auto props = predict_lanes(ps, r.params, spec, NmsParams{15, 0.0});
  ASSERT_FALSE(props.empty());
  for (const auto& p : props) {
    const LanePolyline lane = proposal_to_lane(p);
    EXPECT_NO_THROW(validate_lane(lane, spec.key_points));
    EXPECT_GE(lane.first_valid(), first_visible_row(ps.vp.y, spec));
    for (int i = 0; i < spec.key_points; ++i) {
      if (lane.valid[i]) {
        EXPECT_GE(lane.xs[i], 0.0);
        EXPECT_LE(lane.xs[i], spec.width);
      }
    }
  }
}

}  // namespace
}  // namespace lanestruct
