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

#include "lanestruct/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "lanestruct/error.hpp"

namespace lanestruct {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Returns k if deg == 90 * k exactly (k in 0..3 after wrapping), else -1.
int quarter_turn_index(double deg) {
  double wrapped = std::fmod(deg, 360.0);
  if (wrapped < 0) wrapped += 360.0;
  const double q = wrapped / 90.0;
  if (q == std::floor(q)) return static_cast<int>(q) % 4;
  return -1;
}

}  // namespace

double sin_deg(double deg) {
  static constexpr double kExact[4] = {0.0, 1.0, 0.0, -1.0};
  const int k = quarter_turn_index(deg);
  return k >= 0 ? kExact[k] : std::sin(deg * kDegToRad);
}

double cos_deg(double deg) {
  static constexpr double kExact[4] = {1.0, 0.0, -1.0, 0.0};
  const int k = quarter_turn_index(deg);
  return k >= 0 ? kExact[k] : std::cos(deg * kDegToRad);
}

double fold_half_turn(double deg) {
  double folded = std::fmod(deg, 180.0);
  if (folded < 0) folded += 180.0;
  if (folded >= 180.0) folded -= 180.0;
  return folded;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(p - a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 p, Point2 q) {
    return p.x < q.x || (p.x == q.x && p.y < q.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  // Andrew's monotone chain.
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i > 0; --i) {
    const Point2& p = pts[i - 1];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

struct Candidate {
  double area;
  MinRect rect;
};

// Builds the rectangle spanned by [u_lo, u_hi] along unit axis u and
// [n_lo, n_hi] along its normal n.
MinRect make_rect(Point2 u, Point2 n, double u_lo, double u_hi, double n_lo,
                  double n_hi) {
  const double ext_u = u_hi - u_lo;
  const double ext_n = n_hi - n_lo;
  const Point2 center = (0.5 * (u_lo + u_hi)) * u + (0.5 * (n_lo + n_hi)) * n;

  const double theta_u = fold_half_turn(std::atan2(u.y, u.x) / kDegToRad);
  const double theta_n = fold_half_turn(std::atan2(n.y, n.x) / kDegToRad);

  MinRect rect;
  rect.center = center;
  if (ext_u > ext_n) {
    rect.long_side = ext_u;
    rect.short_side = ext_n;
    rect.theta_deg = theta_u;
  } else if (ext_n > ext_u) {
    rect.long_side = ext_n;
    rect.short_side = ext_u;
    rect.theta_deg = theta_n;
  } else {
    rect.long_side = rect.short_side = ext_u;
    rect.theta_deg = std::abs(theta_u - 90.0) <= std::abs(theta_n - 90.0) ? theta_u : theta_n;
  }
  return rect;
}

bool better(const Candidate& c, const Candidate& best) {
  if (!std::isfinite(best.area)) return true;
  const double tol = 1e-9 * std::max(1.0, best.area);
  if (c.area < best.area - tol) return true;
  if (c.area > best.area + tol) return false;
  return c.rect.theta_deg < best.rect.theta_deg;
}

}  // namespace

MinRect min_area_rect(std::span<const Point2> points) {
  const std::vector<Point2> hull = convex_hull(points);
  if (hull.size() < 2) {
    throw Error(ErrorCode::kDegenerateInput,
                "minimum rectangle needs at least two distinct points");
  }

  if (hull.size() == 2) {
    const Point2 d = hull[1] - hull[0];
    const Point2 u = (1.0 / norm(d)) * d;
    const Point2 n{-u.y, u.x};
    const double u0 = dot(hull[0], u);
    const double u1 = dot(hull[1], u);
    const double nn = dot(hull[0], n);
    return make_rect(u, n, std::min(u0, u1), std::max(u0, u1), nn, nn);
  }

  // Some hull edge is collinear with a side of the optimal rectangle. The
  // extents along each edge come from a full scan of the hull; caliper
  // pointers stall on sliver hulls of nearly collinear points.
  const std::size_t h = hull.size();
  Candidate best{std::numeric_limits<double>::infinity(), {}};
  for (std::size_t i = 0; i < h; ++i) {
    const Point2 e = hull[(i + 1) % h] - hull[i];
    const Point2 u = (1.0 / norm(e)) * e;
    const Point2 n{-u.y, u.x};
    double u_lo = dot(hull[0], u), u_hi = u_lo, n_lo = dot(hull[0], n), n_hi = n_lo;
    for (const Point2& q : hull) {
      u_lo = std::min(u_lo, dot(q, u));
      u_hi = std::max(u_hi, dot(q, u));
      n_lo = std::min(n_lo, dot(q, n));
      n_hi = std::max(n_hi, dot(q, n));
    }
    const MinRect rect = make_rect(u, n, u_lo, u_hi, n_lo, n_hi);
    const Candidate c{rect.area(), rect};
    if (better(c, best)) best = c;
  }
  return best.rect;
}

}  // namespace lanestruct
