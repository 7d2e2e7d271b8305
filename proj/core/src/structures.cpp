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

#include "lanestruct/structures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lanestruct/error.hpp"

namespace lanestruct {

namespace {

constexpr double kHorizonEps = 1e-9;

int grid_extent(int full, int scale) { return (full + scale - 1) / scale; }

}  // namespace

std::vector<std::uint32_t> polyline_cells(std::span<const Point2> pts, int rows, int cols,
                                          int scale, double width_px) {
  std::vector<std::uint32_t> cells;
  for_each_polyline_cell(pts, rows, cols, scale, width_px, [&](int r, int c) {
    cells.push_back(static_cast<std::uint32_t>(r) * static_cast<std::uint32_t>(cols) +
                    static_cast<std::uint32_t>(c));
  });
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

PixelMask rasterize_lanes(std::span<const LanePolyline> lanes, const ImageSpec& spec, int scale,
                          double width_px) {
  spec.validate();
  if (!(width_px >= 1.0) || scale < 1) {
    throw Error(ErrorCode::kInvalidArgument, "rasterization needs width_px >= 1 and scale >= 1");
  }
  PixelMask mask;
  mask.scale = scale;
  mask.grid = Grid<double>(grid_extent(spec.height, scale), grid_extent(spec.width, scale), 0.0);
  const std::vector<double> ys = spec.rows();
  for (const LanePolyline& lane : lanes) {
    const std::vector<Point2> pts = lane.points(ys);
    for_each_polyline_cell(pts, mask.grid.rows, mask.grid.cols, scale, width_px,
                           [&](int r, int c) { mask.grid(r, c) = 1.0; });
  }
  return mask;
}

FeatureGrid modulate_features(const FeatureGrid& f, const PixelMask& p) {
  if (f.rows != p.grid.rows || f.cols != p.grid.cols) {
    throw Error(ErrorCode::kShapeMismatch, "feature grid and mask differ in spatial shape");
  }
  FeatureGrid out = f;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      const double gain = 1.0 + p.grid(r, c);
      for (int ch = 0; ch < f.channels; ++ch) out.at(r, c, ch) = f.at(r, c, ch) * gain;
    }
  }
  return out;
}

double sample_bilinear(const FeatureGrid& f, double gx, double gy, int channel) {
  gx = std::clamp(gx, 0.0, static_cast<double>(f.cols - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(f.rows - 1));
  const int c0 = std::min(static_cast<int>(gx), std::max(f.cols - 2, 0));
  const int r0 = std::min(static_cast<int>(gy), std::max(f.rows - 2, 0));
  const int c1 = std::min(c0 + 1, f.cols - 1);
  const int r1 = std::min(r0 + 1, f.rows - 1);
  const double tx = gx - c0;
  const double ty = gy - r0;
  const double top = (1 - tx) * f.at(r0, c0, channel) + tx * f.at(r0, c1, channel);
  const double bottom = (1 - tx) * f.at(r1, c0, channel) + tx * f.at(r1, c1, channel);
  return (1 - ty) * top + ty * bottom;
}

Homography Homography::from_matrix(const Mat3& m) {
  if (std::abs(m[2][2]) < 1e-15) {
    throw Error(ErrorCode::kInvalidArgument, "homography has zero (3,3) entry");
  }
  const double s = 1.0 / m[2][2];
  const double tol = 1e-12 * std::max({1.0, std::abs(m[0][0] * s), std::abs(m[1][1] * s)});
  if (std::abs(m[1][0] * s) > tol || std::abs(m[2][0] * s) > tol) {
    throw Error(ErrorCode::kInvalidArgument, "matrix lacks the IPM zero pattern");
  }
  Homography h;
  h.h = {m[0][0] * s, m[0][1] * s, m[0][2] * s, m[1][1] * s, m[1][2] * s, m[2][1] * s};
  return h;
}

Mat3 Homography::matrix() const {
  return {{{h[0], h[1], h[2]}, {0.0, h[3], h[4]}, {0.0, h[5], 1.0}}};
}

Mat3 multiply(const Mat3& lhs, const Mat3& rhs) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += lhs[i][k] * rhs[k][j];
  return out;
}

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (std::abs(det) < 1e-15) throw Error(ErrorCode::kInvalidArgument, "singular matrix");
  Mat3 inv;
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

Point2 apply(const Mat3& m, Point2 p) {
  const double w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
  if (std::abs(w) <= kHorizonEps) {
    throw Error(ErrorCode::kHorizonSingularity, "point maps to infinity");
  }
  return {(m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
          (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w};
}

Point2 project(const Homography& h, Point2 p) {
  const double w = h.weight(p);
  if (std::abs(w) <= kHorizonEps) {
    throw Error(ErrorCode::kHorizonSingularity,
                "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                    ") lies on the horizon");
  }
  const auto& k = h.h;
  return {(k[0] * p.x + k[1] * p.y + k[2]) / w, (k[3] * p.y + k[4]) / w};
}

std::vector<Point2> project(const Homography& h, std::span<const Point2> pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(h.weight(pts[i])) <= kHorizonEps) {
      throw Error(ErrorCode::kHorizonSingularity,
                  "point " + std::to_string(i) + " lies on the horizon");
    }
    out.push_back(project(h, pts[i]));
  }
  return out;
}

ProjectionJacobian project_with_jacobian(const Homography& h, Point2 p) {
  ProjectionJacobian j;
  j.value = project(h, p);
  const double w = h.weight(p);
  const auto& k = h.h;
  const double xp = j.value.x;
  const double yp = j.value.y;
  j.dx_dh = {p.x / w, p.y / w, 1.0 / w, 0.0, 0.0, -xp * p.y / w};
  j.dy_dh = {0.0, 0.0, 0.0, p.y / w, 1.0 / w, -yp * p.y / w};
  j.dx_dx = k[0] / w;
  j.dx_dy = (k[1] - xp * k[5]) / w;
  j.dy_dx = 0.0;
  j.dy_dy = (k[3] - yp * k[5]) / w;
  return j;
}

BevLineFit fit_bev_line_with_jacobian(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  if (n < 2) throw Error(ErrorCode::kDegenerateInput, "line fit needs at least two points");
  double mx = 0, my = 0;
  for (const Point2& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (const Point2& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  const double spread = sxx + syy;
  const double aniso_a = sxx - syy;
  const double aniso_b = 2.0 * sxy;
  const double denom = aniso_a * aniso_a + aniso_b * aniso_b;
  if (spread == 0.0 || denom <= 1e-24 * spread * spread) {
    throw Error(ErrorCode::kDegenerateInput, "points do not determine a line");
  }

  // Principal axis angle of the scatter matrix; the line normal is
  // perpendicular to it.
  const double psi = 0.5 * std::atan2(aniso_b, aniso_a);
  double a = -std::sin(psi);
  double b = std::cos(psi);
  double sign = 1.0;
  if (a < 0.0 || (a == 0.0 && b < 0.0)) sign = -1.0;
  a *= sign;
  b *= sign;
  if (a == 0.0) a = 0.0;
  if (b == 0.0) b = 0.0;

  BevLineFit fit;
  fit.line = {a, b, -(a * mx + b * my)};

  const double dpsi_dsxx = -0.5 * aniso_b / denom;
  const double dpsi_dsyy = 0.5 * aniso_b / denom;
  const double dpsi_dsxy = aniso_a / denom;
  const double da_dpsi = -sign * std::cos(psi);
  const double db_dpsi = -sign * std::sin(psi);
  const double inv_n = 1.0 / static_cast<double>(n);

  fit.grad_a.resize(n);
  fit.grad_b.resize(n);
  fit.grad_c.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ex = pts[k].x - mx;
    const double ey = pts[k].y - my;
    const double dpsi_dx = dpsi_dsxx * 2.0 * ex + dpsi_dsxy * ey;
    const double dpsi_dy = dpsi_dsyy * 2.0 * ey + dpsi_dsxy * ex;
    fit.grad_a[k] = {da_dpsi * dpsi_dx, da_dpsi * dpsi_dy};
    fit.grad_b[k] = {db_dpsi * dpsi_dx, db_dpsi * dpsi_dy};
    fit.grad_c[k] = {-(fit.grad_a[k].x * mx + fit.grad_b[k].x * my + a * inv_n),
                     -(fit.grad_a[k].y * mx + fit.grad_b[k].y * my + b * inv_n)};
  }
  return fit;
}

BevLine fit_bev_line(std::span<const Point2> pts) { return fit_bev_line_with_jacobian(pts).line; }

double parallelism_residual(const BevLine& l1, const BevLine& l2) {
  return std::abs(l1.a * l2.b - l2.a * l1.b);
}

AttentionMap attention_map(const VanishingPoint& vp, const ImageSpec& spec, int scale,
                           double sigma_x, double sigma_y, bool inverted) {
  spec.validate();
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0) || scale < 1) {
    throw Error(ErrorCode::kInvalidArgument, "attention map needs sigma > 0 and scale >= 1");
  }
  AttentionMap pam;
  pam.vp = vp;
  pam.sigma_x = sigma_x;
  pam.sigma_y = sigma_y;
  pam.scale = scale;
  pam.inverted = inverted;
  pam.grid = Grid<double>(grid_extent(spec.height, scale), grid_extent(spec.width, scale), 0.0);
  for (int r = 0; r < pam.grid.rows; ++r) {
    for (int c = 0; c < pam.grid.cols; ++c) {
      const double dx = (c + 0.5) * scale - vp.x;
      const double dy = (r + 0.5) * scale - vp.y;
      const double e = std::exp(-(dx * dx / (2 * sigma_x * sigma_x) +
                                  dy * dy / (2 * sigma_y * sigma_y)));
      pam.grid(r, c) = inverted ? 1.0 - e : e;
    }
  }
  return pam;
}

double sample_attention(const AttentionMap& pam, double x, double y) {
  const Grid<double>& g = pam.grid;
  const double gx = std::clamp(x / pam.scale - 0.5, 0.0, static_cast<double>(g.cols - 1));
  const double gy = std::clamp(y / pam.scale - 0.5, 0.0, static_cast<double>(g.rows - 1));
  const int c0 = std::min(static_cast<int>(gx), std::max(g.cols - 2, 0));
  const int r0 = std::min(static_cast<int>(gy), std::max(g.rows - 2, 0));
  const int c1 = std::min(c0 + 1, g.cols - 1);
  const int r1 = std::min(r0 + 1, g.rows - 1);
  const double tx = gx - c0;
  const double ty = gy - r0;
  return (1 - ty) * ((1 - tx) * g(r0, c0) + tx * g(r0, c1)) +
         ty * ((1 - tx) * g(r1, c0) + tx * g(r1, c1));
}

}  // namespace lanestruct
