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

#include <cstdint>
#include <span>
#include <vector>

#include "lanestruct/geometry.hpp"

namespace lanestruct {

// Image geometry and the fixed key-point row grid y_i = H / (P - 1) * i.
struct ImageSpec {
  int height = 360;
  int width = 640;
  int key_points = 72;

  double row_y(int i) const {
    return static_cast<double>(height) / (key_points - 1) * i;
  }
  std::vector<double> rows() const;

  // Throws kInvalidArgument unless H > 0, W > 0 and P >= 2.
  void validate() const;
};

using RowMask = std::vector<std::uint8_t>;

// One lane sampled on a row grid. Rows with valid[i] == 0 carry no data; the
// valid rows form one contiguous run.
struct LanePolyline {
  std::vector<double> xs;
  RowMask valid;

  int valid_count() const;
  int first_valid() const;  // -1 if none
  int last_valid() const;   // -1 if none

  // Image points (xs[i], ys[i]) on the valid rows, in row order.
  std::vector<Point2> points(std::span<const double> ys) const;
};

// Throws kInvalidArgument unless the lane has `rows` entries, at least two
// valid rows forming a single run, and finite x on every valid row.
void validate_lane(const LanePolyline& lane, int rows);

// Center line a*x + b*y + c = 0, normalized so a^2 + b^2 = 1 and a > 0.
// theta is the line direction measured from +x towards +y, in (0, 180).
struct CenterLineParams {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double theta = 90.0;

  // Line through `origin` with direction angle theta (degrees). Throws
  // kCollinearHorizontal for horizontal directions.
  static CenterLineParams through(Point2 origin, double theta_deg);

  // x on the line at row y, i.e. (-c - b*y) / a.
  double x_at(double y) const { return (-c - b * y) / a; }
};

struct BoxLineCode {
  CenterLineParams center;
  double rect_h = 0.0;  // long side
  double rect_w = 0.0;  // short side
  Point2 rect_center;
  std::vector<double> dx;  // 0 on invalid rows
  RowMask valid;
};

struct CircumscribedRect {
  double rect_h = 0.0;
  double rect_w = 0.0;
  double theta = 90.0;
  Point2 center;
};

// Minimum-area enclosing rectangle with the long side taken as the lane
// axis. Throws kDegenerateInput if all points coincide and
// kCollinearHorizontal if the long axis is horizontal.
CircumscribedRect min_circumscribed_rect(std::span<const Point2> points);

BoxLineCode encode(const LanePolyline& lane, const ImageSpec& spec);
LanePolyline decode(const BoxLineCode& code, const ImageSpec& spec);

}  // namespace lanestruct
