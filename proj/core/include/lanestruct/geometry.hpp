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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace lanestruct {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 p, Point2 q) { return {p.x + q.x, p.y + q.y}; }
  friend Point2 operator-(Point2 p, Point2 q) { return {p.x - q.x, p.y - q.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2 p, Point2 q) = default;
};

inline double dot(Point2 p, Point2 q) { return p.x * q.x + p.y * q.y; }
inline double cross(Point2 p, Point2 q) { return p.x * q.y - p.y * q.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }

// Trigonometry in degrees. Multiples of 90 degrees return exact values so
// that vertical anchors evaluate to exactly constant x.
double sin_deg(double deg);
double cos_deg(double deg);

// Folds an angle in degrees into [0, 180).
double fold_half_turn(double deg);

// Euclidean distance from p to the closed segment [a, b].
double point_segment_distance(Point2 p, Point2 a, Point2 b);

// Convex hull in counter-clockwise order (for a y-up frame), collinear
// points removed. Input order does not affect the result.
std::vector<Point2> convex_hull(std::span<const Point2> points);

// Minimum-area enclosing rectangle. `long_side` is the rectangle extent
// along `theta_deg`, the direction of the long side folded into [0, 180)
// and measured from +x towards +y.
struct MinRect {
  double long_side = 0.0;
  double short_side = 0.0;
  double theta_deg = 0.0;
  Point2 center;

  double area() const { return long_side * short_side; }
};

// Convex hull, then one candidate per hull edge. Equal-area candidates are
// resolved toward the smaller theta; a square resolves to the more
// vertical side. Throws kDegenerateInput when all points coincide.
MinRect min_area_rect(std::span<const Point2> points);

// Dense 2D array in row-major order.
template <typename T>
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int r, int c, T fill = T{})
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace lanestruct
