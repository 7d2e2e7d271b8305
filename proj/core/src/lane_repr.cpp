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

#include "lanestruct/lane_repr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lanestruct/error.hpp"

namespace lanestruct {

std::vector<double> ImageSpec::rows() const {
  std::vector<double> ys(static_cast<std::size_t>(key_points));
  for (int i = 0; i < key_points; ++i) ys[static_cast<std::size_t>(i)] = row_y(i);
  return ys;
}

void ImageSpec::validate() const {
  if (height <= 0 || width <= 0 || key_points < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "image spec needs H > 0, W > 0, P >= 2 (got " + std::to_string(height) + "," +
                    std::to_string(width) + "," + std::to_string(key_points) + ")");
  }
}

int LanePolyline::valid_count() const {
  return static_cast<int>(std::count(valid.begin(), valid.end(), 1));
}

int LanePolyline::first_valid() const {
  const auto it = std::find(valid.begin(), valid.end(), 1);
  return it == valid.end() ? -1 : static_cast<int>(it - valid.begin());
}

int LanePolyline::last_valid() const {
  const auto it = std::find(valid.rbegin(), valid.rend(), 1);
  return it == valid.rend() ? -1 : static_cast<int>(valid.rend() - it) - 1;
}

std::vector<Point2> LanePolyline::points(std::span<const double> ys) const {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (valid[i]) pts.push_back({xs[i], ys[i]});
  }
  return pts;
}

void validate_lane(const LanePolyline& lane, int rows) {
  if (static_cast<int>(lane.xs.size()) != rows || static_cast<int>(lane.valid.size()) != rows) {
    throw Error(ErrorCode::kInvalidArgument,
                "lane has " + std::to_string(lane.xs.size()) + " rows, expected " +
                    std::to_string(rows));
  }
  const int first = lane.first_valid();
  const int last = lane.last_valid();
  if (first < 0 || lane.valid_count() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "lane needs at least two valid rows");
  }
  if (last - first + 1 != lane.valid_count()) {
    throw Error(ErrorCode::kInvalidArgument, "valid rows of a lane must be contiguous");
  }
  for (int i = first; i <= last; ++i) {
    if (!std::isfinite(lane.xs[static_cast<std::size_t>(i)])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite x on valid row " + std::to_string(i));
    }
  }
}

CenterLineParams CenterLineParams::through(Point2 origin, double theta_deg) {
  const double theta = fold_half_turn(theta_deg);
  // Normal of the direction (cos t, sin t); sin t > 0 on (0, 180) gives a > 0.
  CenterLineParams line;
  line.a = sin_deg(theta);
  line.b = -cos_deg(theta);
  if (line.b == 0.0) line.b = 0.0;  // drop negative zero
  if (!(line.a > 0.0)) {
    throw Error(ErrorCode::kCollinearHorizontal, "center line is horizontal (a = 0)");
  }
  line.c = -(line.a * origin.x + line.b * origin.y);
  line.theta = theta;
  return line;
}

CircumscribedRect min_circumscribed_rect(std::span<const Point2> points) {
  const MinRect r = min_area_rect(points);
  if (!(sin_deg(r.theta_deg) > 0.0)) {
    throw Error(ErrorCode::kCollinearHorizontal, "lane axis is horizontal");
  }
  return {r.long_side, r.short_side, r.theta_deg, r.center};
}

BoxLineCode encode(const LanePolyline& lane, const ImageSpec& spec) {
  spec.validate();
  validate_lane(lane, spec.key_points);
  const std::vector<double> ys = spec.rows();
  const std::vector<Point2> pts = lane.points(ys);
  const CircumscribedRect rect = min_circumscribed_rect(pts);

  BoxLineCode code;
  code.center = CenterLineParams::through(rect.center, rect.theta);
  code.rect_h = rect.rect_h;
  code.rect_w = rect.rect_w;
  code.rect_center = rect.center;
  code.valid = lane.valid;
  code.dx.assign(lane.xs.size(), 0.0);
  for (std::size_t i = 0; i < lane.xs.size(); ++i) {
    if (lane.valid[i]) code.dx[i] = lane.xs[i] - code.center.x_at(ys[i]);
  }
  return code;
}

LanePolyline decode(const BoxLineCode& code, const ImageSpec& spec) {
  spec.validate();
  const auto p = static_cast<std::size_t>(spec.key_points);
  if (code.dx.size() != p || code.valid.size() != p) {
    throw Error(ErrorCode::kInvalidArgument, "box-line code length does not match P");
  }
  if (code.center.a == 0.0) {
    throw Error(ErrorCode::kCollinearHorizontal, "center line is horizontal (a = 0)");
  }
  LanePolyline lane;
  lane.valid = code.valid;
  lane.xs.assign(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    if (code.valid[i]) {
      lane.xs[i] = code.center.x_at(spec.row_y(static_cast<int>(i))) + code.dx[i];
    }
  }
  return lane;
}

}  // namespace lanestruct
