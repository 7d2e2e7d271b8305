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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lanestruct/anchoring.hpp"
#include "lanestruct/geometry.hpp"
#include "lanestruct/lane_repr.hpp"

namespace lanestruct {

// ---------------------------------------------------------------------------
// Lane rasterization
// ---------------------------------------------------------------------------

// Values in [0, 1] on a ceil(H / scale) x ceil(W / scale) grid; cell (r, c)
// covers the full-resolution pixels around ((c + 0.5) * scale, (r + 0.5) * scale).
struct PixelMask {
  Grid<double> grid;
  int scale = 1;
};

// Visits every cell whose center lies within width_px / 2 of the polyline.
// Cells may be visited more than once.
template <typename Visit>
void for_each_polyline_cell(std::span<const Point2> pts, int rows, int cols, int scale,
                            double width_px, Visit&& visit);

// Sorted, de-duplicated linear indices (r * cols + c) of the cells covered
// by the thick polyline.
std::vector<std::uint32_t> polyline_cells(std::span<const Point2> pts, int rows, int cols,
                                          int scale, double width_px);

// Binary mask: a cell is 1 iff its center lies within width_px / 2 of any
// segment between consecutive valid key points of any lane.
PixelMask rasterize_lanes(std::span<const LanePolyline> lanes, const ImageSpec& spec,
                          int scale = 1, double width_px = 4.0);

// ---------------------------------------------------------------------------
// Feature modulation
// ---------------------------------------------------------------------------

struct FeatureGrid {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<double> data;  // (r, c, ch) with ch fastest

  FeatureGrid() = default;
  FeatureGrid(int r, int c, int ch)
      : rows(r), cols(c), channels(ch), data(static_cast<std::size_t>(r) * c * ch, 0.0) {}

  double& at(int r, int c, int ch) {
    return data[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }
  double at(int r, int c, int ch) const {
    return data[(static_cast<std::size_t>(r) * cols + c) * channels + ch];
  }
};

// out = f * p + f, with p broadcast over channels. Throws kShapeMismatch.
FeatureGrid modulate_features(const FeatureGrid& f, const PixelMask& p);

// Bilinear sample of one channel at grid coordinates (gx, gy), where cell
// centers sit on integers. Coordinates are clamped to the grid.
double sample_bilinear(const FeatureGrid& f, double gx, double gy, int channel);

// ---------------------------------------------------------------------------
// Inverse perspective mapping
// ---------------------------------------------------------------------------

using Mat3 = std::array<std::array<double, 3>, 3>;

// H = [[h1, h2, h3], [0, h4, h5], [0, h6, 1]] mapping image points to the
// bird's-eye view.
struct Homography {
  std::array<double, 6> h{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};

  static Homography identity() { return {}; }
  // Normalizes m by m[2][2]; throws kInvalidArgument unless the result has
  // the zero pattern of this parameterization (to 1e-12).
  static Homography from_matrix(const Mat3& m);

  Mat3 matrix() const;
  double det() const { return h[0] * (h[3] - h[4] * h[5]); }
  // Third homogeneous coordinate of the image of (x, y).
  double weight(Point2 p) const { return h[5] * p.y + 1.0; }
};

Mat3 multiply(const Mat3& lhs, const Mat3& rhs);
// Throws kInvalidArgument for a singular matrix.
Mat3 invert(const Mat3& m);
// Homogeneous transform with perspective division; throws
// kHorizonSingularity when |w| <= 1e-9.
Point2 apply(const Mat3& m, Point2 p);

// Thrown as kHorizonSingularity with the offending index when a point lies
// on the projective horizon (|w| <= 1e-9).
std::vector<Point2> project(const Homography& h, std::span<const Point2> pts);
Point2 project(const Homography& h, Point2 p);

// Projection of one point with its derivatives.
struct ProjectionJacobian {
  Point2 value;
  std::array<double, 6> dx_dh{};
  std::array<double, 6> dy_dh{};
  // d(value) / d(input point)
  double dx_dx = 0, dx_dy = 0, dy_dx = 0, dy_dy = 0;
};
ProjectionJacobian project_with_jacobian(const Homography& h, Point2 p);

// Unit-normalized line a*x + b*y + c = 0 in the bird's-eye view with a >= 0
// (and b > 0 when a == 0).
struct BevLine {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
};

// Total-least-squares line through the points. Throws kDegenerateInput for
// fewer than two distinct points or an isotropic point cloud.
BevLine fit_bev_line(std::span<const Point2> pts);

// The fitted line with the gradients of a, b and c with respect to every
// input point ((d/dx_k, d/dy_k) stored as a Point2).
struct BevLineFit {
  BevLine line;
  std::vector<Point2> grad_a;
  std::vector<Point2> grad_b;
  std::vector<Point2> grad_c;
};
BevLineFit fit_bev_line_with_jacobian(std::span<const Point2> pts);

// |a1 * b2 - a2 * b1| for unit-normalized lines.
double parallelism_residual(const BevLine& l1, const BevLine& l2);

// ---------------------------------------------------------------------------
// Perspective attention
// ---------------------------------------------------------------------------

struct AttentionMap {
  Grid<double> grid;
  VanishingPoint vp;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  int scale = 1;
  bool inverted = false;
};

// E(x, y) = exp(-((x - vx)^2 / (2 sx^2) + (y - vy)^2 / (2 sy^2))) at cell
// centers. With `inverted`, 1 - E is stored instead.
AttentionMap attention_map(const VanishingPoint& vp, const ImageSpec& spec, int scale,
                           double sigma_x, double sigma_y, bool inverted = false);

// Bilinear sample at full-resolution image coordinates.
double sample_attention(const AttentionMap& pam, double x, double y);

// ---------------------------------------------------------------------------

template <typename Visit>
void for_each_polyline_cell(std::span<const Point2> pts, int rows, int cols, int scale,
                            double width_px, Visit&& visit) {
  const double half = 0.5 * width_px;
  const double s = static_cast<double>(scale);
  auto cell_lo = [&](double v) { return static_cast<int>(std::ceil(v / s - 0.5)); };
  auto cell_hi = [&](double v) { return static_cast<int>(std::floor(v / s - 0.5)); };
  for (std::size_t k = 0; k + 1 < pts.size() || (pts.size() == 1 && k == 0); ++k) {
    const Point2 a = pts[k];
    const Point2 b = pts.size() == 1 ? pts[k] : pts[k + 1];
    const int c0 = std::max(0, cell_lo(std::min(a.x, b.x) - half));
    const int c1 = std::min(cols - 1, cell_hi(std::max(a.x, b.x) + half));
    const int r0 = std::max(0, cell_lo(std::min(a.y, b.y) - half));
    const int r1 = std::min(rows - 1, cell_hi(std::max(a.y, b.y) + half));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const Point2 center{(c + 0.5) * s, (r + 0.5) * s};
        if (point_segment_distance(center, a, b) <= half) visit(r, c);
      }
    }
  }
}

}  // namespace lanestruct
