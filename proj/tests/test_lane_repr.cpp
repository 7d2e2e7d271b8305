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

#include "lanestruct/lane_repr.hpp"
#include "test_support.hpp"

namespace lanestruct {
namespace {

using test::half_turn_gap;
using test::sweep_min_rect;

TEST(ImageSpecTest, RowGridAndValidation) {
  const ImageSpec spec;
  const auto ys = spec.rows();
  ASSERT_EQ(ys.size(), 72u);
  EXPECT_DOUBLE_EQ(ys.front(), 0.0);
  EXPECT_DOUBLE_EQ(ys.back(), 360.0);
  EXPECT_LS_ERROR((ImageSpec{0, 640, 72}.validate()), ErrorCode::kInvalidArgument);
  EXPECT_LS_ERROR((ImageSpec{360, -1, 72}.validate()), ErrorCode::kInvalidArgument);
  EXPECT_LS_ERROR((ImageSpec{360, 640, 1}.validate()), ErrorCode::kInvalidArgument);
}

TEST(LaneValidationTest, RejectsGapsShortRunsAndNonFinite) {
  const ImageSpec spec;
  LanePolyline lane = test::vertical_lane(spec, 100, 10, 20);
  EXPECT_NO_THROW(validate_lane(lane, spec.key_points));
  lane.valid[15] = 0;
  EXPECT_LS_ERROR(validate_lane(lane, spec.key_points), ErrorCode::kInvalidArgument);
  EXPECT_LS_ERROR(validate_lane(test::vertical_lane(spec, 100, 5, 5), spec.key_points),
                  ErrorCode::kInvalidArgument);
  LanePolyline nan_lane = test::vertical_lane(spec, 100, 10, 20);
  nan_lane.xs[12] = NAN;
  EXPECT_LS_ERROR(validate_lane(nan_lane, spec.key_points), ErrorCode::kInvalidArgument);
  EXPECT_LS_ERROR(validate_lane(lane, 10), ErrorCode::kInvalidArgument);
}

TEST(MinRectTest, VerticalCollinearPoints) {
  const std::vector<Point2> pts{{100, 0}, {100, 100}, {100, 200}};
  const CircumscribedRect r = min_circumscribed_rect(pts);
  EXPECT_NEAR(r.rect_h, 200.0, 1e-9);
  EXPECT_NEAR(r.rect_w, 0.0, 1e-9);
  EXPECT_NEAR(r.theta, 90.0, 1e-9);
  EXPECT_NEAR(r.center.x, 100.0, 1e-9);
  EXPECT_NEAR(r.center.y, 100.0, 1e-9);
}

TEST(MinRectTest, TwoPointsDefineAxis) {
  const std::vector<Point2> pts{{0, 0}, {100, 100}};
  const CircumscribedRect r = min_circumscribed_rect(pts);
  EXPECT_NEAR(r.rect_h, 100.0 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(r.rect_w, 0.0, 1e-9);
  EXPECT_NEAR(r.theta, 45.0, 1e-9);
  EXPECT_NEAR(r.center.x, 50.0, 1e-9);
  EXPECT_NEAR(r.center.y, 50.0, 1e-9);
}

TEST(MinRectTest, ShallowSCurveMatchesAngleSweep) {
  std::vector<Point2> pts;
  for (int k = 0; k < 20; ++k) {
    const double y = 20.0 + 16.0 * k;
    pts.push_back({300.0 + 0.4 * y + 12.0 * std::sin(2.0 * M_PI * y / 320.0), y});
  }
  const CircumscribedRect r = min_circumscribed_rect(pts);
  const auto oracle = sweep_min_rect(pts);
  EXPECT_LE(r.rect_h * r.rect_w, oracle.area + 1e-6);
  EXPECT_LT(half_turn_gap(r.theta, oracle.theta), 0.05);
  EXPECT_NEAR(r.rect_h, oracle.long_side, 0.1);
  EXPECT_NEAR(r.rect_w, oracle.short_side, 0.1);
  EXPECT_NEAR(r.center.x, oracle.center.x, 0.1);
  EXPECT_NEAR(r.center.y, oracle.center.y, 0.1);
}

TEST(MinRectTest, RandomSetsNoWorseThanSweep) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> count(2, 64);
  std::uniform_real_distribution<double> ux(0, 640), uy(0, 360), stretch(0.05, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Point2> pts(count(rng));
    const double sx = stretch(rng);
    for (auto& p : pts) p = {320 + sx * (ux(rng) - 320), uy(rng)};
    CircumscribedRect r;
    try {
      r = min_circumscribed_rect(pts);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kCollinearHorizontal);
      continue;
    }
    EXPECT_LE(r.rect_h * r.rect_w, sweep_min_rect(pts).area + 1e-6) << "trial " << trial;
  }
}

TEST(MinRectTest, ContainmentAndAngleRange) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Point2> pts(3 + trial % 30);
    for (auto& p : pts) p = {200 + u(rng), 150 + 3 * u(rng)};
    const CircumscribedRect r = min_circumscribed_rect(pts);
    EXPECT_GT(r.theta, 0.0);
    EXPECT_LT(r.theta, 180.0);
    EXPECT_GE(r.rect_h, r.rect_w);
    const Point2 ax{std::cos(r.theta * M_PI / 180), std::sin(r.theta * M_PI / 180)};
    const Point2 nx{-ax.y, ax.x};
    for (const Point2& p : pts) {
      EXPECT_LE(std::abs(dot(p - r.center, ax)), 0.5 * r.rect_h + 1e-6);
      EXPECT_LE(std::abs(dot(p - r.center, nx)), 0.5 * r.rect_w + 1e-6);
    }
  }
}

TEST(MinRectTest, PointOrderDoesNotMatter) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const LanePolyline lane = test::random_lane(rng, ImageSpec{});
    auto pts = lane.points(ImageSpec{}.rows());
    const CircumscribedRect fwd = min_circumscribed_rect(pts);
    std::reverse(pts.begin(), pts.end());
    const CircumscribedRect rev = min_circumscribed_rect(pts);
    EXPECT_EQ(fwd.theta, rev.theta);
    EXPECT_EQ(fwd.rect_h, rev.rect_h);
    EXPECT_EQ(fwd.rect_w, rev.rect_w);
    EXPECT_EQ(fwd.center, rev.center);
  }
}

TEST(MinRectTest, Errors) {
  const std::vector<Point2> same{{5, 5}, {5, 5}, {5, 5}};
  EXPECT_LS_ERROR(min_circumscribed_rect(same), ErrorCode::kDegenerateInput);
  const std::vector<Point2> flat{{0, 10}, {50, 10}, {100, 10}};
  EXPECT_LS_ERROR(min_circumscribed_rect(flat), ErrorCode::kCollinearHorizontal);
}

TEST(EncodeTest, VerticalLane) {
  const ImageSpec spec;
  const BoxLineCode code = encode(test::vertical_lane(spec, 100), spec);
  EXPECT_NEAR(code.center.a, 1.0, 1e-12);
  EXPECT_NEAR(code.center.b, 0.0, 1e-12);
  EXPECT_NEAR(code.center.c, -100.0, 1e-9);
  EXPECT_NEAR(code.center.theta, 90.0, 1e-9);
  for (double d : code.dx) EXPECT_NEAR(d, 0.0, 1e-9);
}

TEST(EncodeTest, DiagonalLane) {
  const ImageSpec spec;
  const BoxLineCode code =
      encode(test::lane_from(spec, [](double y) { return y; }, 0, spec.key_points - 1), spec);
  EXPECT_NEAR(code.center.theta, 45.0, 1e-9);
  for (double d : code.dx) EXPECT_NEAR(d, 0.0, 1e-9);
}

TEST(EncodeTest, CurvedLaneOffsetsRecomputed) {
  const ImageSpec spec;
  const LanePolyline lane =
      test::lane_from(spec, [](double y) { return 100 + 0.001 * y * y; }, 0, spec.key_points - 1);
  const BoxLineCode code = encode(lane, spec);
  const auto ys = spec.rows();

  // The axis must agree with an angle-sweep rectangle of the same points.
  const auto oracle = sweep_min_rect(lane.points(ys));
  EXPECT_LT(half_turn_gap(code.center.theta, oracle.theta), 0.05);
  EXPECT_NEAR(code.rect_center.x, oracle.center.x, 0.1);
  EXPECT_NEAR(code.rect_center.y, oracle.center.y, 0.1);

  // Center line rebuilt from the rectangle center and angle.
  const double t = code.center.theta * M_PI / 180.0;
  double a = std::sin(t), b = -std::cos(t);
  double c = -(a * code.rect_center.x + b * code.rect_center.y);
  if (a < 0) a = -a, b = -b, c = -c;
  EXPECT_NEAR(code.center.a, a, 1e-9);
  EXPECT_NEAR(code.center.b, b, 1e-9);
  EXPECT_NEAR(code.center.c, c, 1e-6);
  for (int i = 0; i < spec.key_points; ++i) {
    EXPECT_NEAR(code.dx[i], lane.xs[i] - (-c - b * ys[i]) / a, 1e-6) << "row " << i;
  }
}

TEST(EncodeTest, InvalidRowsCarrySentinel) {
  const ImageSpec spec;
  const BoxLineCode code = encode(test::vertical_lane(spec, 200, 30, 60), spec);
  for (int i = 0; i < spec.key_points; ++i) {
    const bool inside = i >= 30 && i <= 60;
    EXPECT_EQ(code.valid[i], inside ? 1 : 0);
    if (!inside) EXPECT_EQ(code.dx[i], 0.0);
  }
  EXPECT_GE(code.rect_h, code.rect_w);
}

TEST(EncodeTest, HorizontalAxisRejected) {
  const ImageSpec spec{100, 640, 3};
  LanePolyline lane = test::lane_from(spec, [](double y) { return 10 * y; }, 0, 2);
  lane.xs = {0, 300, 600};  // long axis tilted but shallow
  EXPECT_NO_THROW(encode(lane, spec));
  const std::vector<Point2> flat{{0, 50}, {300, 50}};
  EXPECT_LS_ERROR(min_circumscribed_rect(flat), ErrorCode::kCollinearHorizontal);
}

TEST(DecodeTest, Examples) {
  const ImageSpec spec{100, 640, 3};
  BoxLineCode vertical;
  vertical.center = {1.0, 0.0, -100.0, 90.0};
  vertical.dx.assign(3, 0.0);
  vertical.valid.assign(3, 1);
  for (double x : decode(vertical, spec).xs) EXPECT_DOUBLE_EQ(x, 100.0);

  BoxLineCode diag;
  diag.center = {1.0, -1.0, 0.0, 45.0};
  diag.dx.assign(3, 0.0);
  diag.valid.assign(3, 1);
  EXPECT_DOUBLE_EQ(decode(diag, spec).xs[1], 50.0);  // row y = 50
}

TEST(RoundTripTest, RandomLanesSeveralGrids) {
  std::mt19937_64 rng(2024);
  for (const ImageSpec spec : {ImageSpec{}, ImageSpec{590, 1640, 72}, ImageSpec{720, 1280, 56}}) {
    for (int trial = 0; trial < 200; ++trial) {
      const LanePolyline lane = test::random_lane(rng, spec);
      const LanePolyline back = decode(encode(lane, spec), spec);
      ASSERT_EQ(back.valid, lane.valid);
      for (int i = 0; i < spec.key_points; ++i) {
        if (lane.valid[i]) ASSERT_NEAR(back.xs[i], lane.xs[i], 1e-6);
      }
    }
  }
}

TEST(CenterLineTest, ThroughAndNormalization) {
  const CenterLineParams l = CenterLineParams::through({320, 100}, 60.0);
  EXPECT_NEAR(l.a * l.a + l.b * l.b, 1.0, 1e-12);
  EXPECT_GT(l.a, 0.0);
  EXPECT_NEAR(l.a * 320 + l.b * 100 + l.c, 0.0, 1e-9);
  EXPECT_NEAR(l.x_at(100), 320.0, 1e-9);
  EXPECT_LS_ERROR(CenterLineParams::through({0, 0}, 180.0), ErrorCode::kCollinearHorizontal);
}

}  // namespace
}  // namespace lanestruct
