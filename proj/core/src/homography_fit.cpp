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
#include <limits>

#include "lanestruct/error.hpp"
#include "lanestruct/losses.hpp"

namespace lanestruct {

double homography_parallelism(const Homography& h, std::span<const std::vector<Point2>> lanes,
                              std::array<double, 6>* grad) {
  std::vector<BevLine> lines;
  std::vector<BevLineFit> fits;
  std::vector<std::vector<ProjectionJacobian>> jacobians;
  lines.reserve(lanes.size());
  for (const std::vector<Point2>& lane : lanes) {
    std::vector<ProjectionJacobian> jac;
    std::vector<Point2> bev;
    jac.reserve(lane.size());
    bev.reserve(lane.size());
    for (const Point2& p : lane) {
      jac.push_back(project_with_jacobian(h, p));
      bev.push_back(jac.back().value);
    }
    fits.push_back(fit_bev_line_with_jacobian(bev));
    lines.push_back(fits.back().line);
    jacobians.push_back(std::move(jac));
  }

  const LossValue loss = parallelism_loss(lines);
  if (grad != nullptr) {
    grad->fill(0.0);
    const std::vector<double>& gl = loss.grad("lines");
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      const double ga = gl[3 * l];
      const double gb = gl[3 * l + 1];
      for (std::size_t k = 0; k < jacobians[l].size(); ++k) {
        const double gx = ga * fits[l].grad_a[k].x + gb * fits[l].grad_b[k].x;
        const double gy = ga * fits[l].grad_a[k].y + gb * fits[l].grad_b[k].y;
        for (std::size_t m = 0; m < 6; ++m) {
          (*grad)[m] += gx * jacobians[l][k].dx_dh[m] + gy * jacobians[l][k].dy_dh[m];
        }
      }
    }
  }
  return loss.value;
}

Homography initial_ipm_guess(std::span<const std::vector<Point2>> lanes) {
  double top = std::numeric_limits<double>::infinity();
  for (const auto& lane : lanes)
    for (const Point2& p : lane) top = std::min(top, p.y);
  if (!(top >= 1.0) || !std::isfinite(top)) {
    throw Error(ErrorCode::kInvalidArgument,
                "lanes reach the top image row; no horizon fits above them");
  }
  Homography h;
  h.h[5] = -1.0 / (0.5 * top);
  return h;
}

namespace {

// Stepping scale of each parameter in image units.
std::array<double, 6> parameter_scales(std::span<const std::vector<Point2>> lanes) {
  double extent = 1.0;
  for (const auto& lane : lanes)
    for (const Point2& p : lane) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  return {1.0, 1.0, extent, 1.0, extent, 1.0 / extent};
}

// Left-multiplying H by a bird's-eye affine map A (upper triangular, last
// row (0, 0, 1)) keeps the zero pattern and spans the h1..h5 coordinates,
// while parallelism is invariant under it. The residual magnitude is not:
// shrinking the view makes every line look parallel. Fixing A so the
// projected lane points have zero mean and a fixed spread per axis removes
// that direction; only h6 (the horizon) is left to optimize. The spread is
// set to `extent` so the view stays in image-like units.
Homography normalize_gauge(const Homography& h, std::span<const std::vector<Point2>> lanes,
                           double extent) {
  double n = 0, mx = 0, my = 0, sxx = 0, syy = 0;
  for (const auto& lane : lanes) {
    for (const Point2& p : lane) {
      const Point2 q = project(h, p);
      n += 1;
      mx += q.x;
      my += q.y;
      sxx += q.x * q.x;
      syy += q.y * q.y;
    }
  }
  mx /= n;
  my /= n;
  const double sx = std::sqrt(std::max(sxx / n - mx * mx, 0.0));
  const double sy = std::sqrt(std::max(syy / n - my * my, 0.0));
  if (!(sx > 0.0) || !(sy > 0.0) || !std::isfinite(sx) || !std::isfinite(sy)) return h;
  const double gx = extent / sx;
  const double gy = extent / sy;
  const Mat3 gauge{{{gx, 0.0, -mx * gx}, {0.0, gy, -my * gy}, {0.0, 0.0, 1.0}}};
  return Homography::from_matrix(multiply(gauge, h.matrix()));
}

// True if every lane point keeps the sign of its homogeneous weight and the
// determinant stays away from zero.
bool admissible(const Homography& h, std::span<const std::vector<Point2>> lanes,
                const std::vector<double>& ref_sign, double min_abs_det) {
  if (!(std::abs(h.det()) > min_abs_det)) return false;
  std::size_t idx = 0;
  for (const auto& lane : lanes) {
    for (const Point2& p : lane) {
      const double w = h.weight(p);
      if (!(std::abs(w) > 1e-9) || (w > 0) != (ref_sign[idx++] > 0)) return false;
    }
  }
  return true;
}

}  // namespace

HomographyFit optimize_homography(std::span<const std::vector<Point2>> lanes,
                                  const Homography& init, const HomographyFitOptions& options) {
  if (!(std::abs(init.det()) > 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument, "initial homography is singular");
  }
  HomographyFit fit;
  fit.h = init;
  if (lanes.size() < 2) {
    fit.too_few_lanes = true;
    return fit;
  }

  std::vector<double> ref_sign;
  for (const auto& lane : lanes)
    for (const Point2& p : lane) ref_sign.push_back(init.weight(p) > 0 ? 1.0 : -1.0);
  const std::array<double, 6> scales = parameter_scales(lanes);

  Homography current = normalize_gauge(init, lanes, scales[2]);
  std::array<double, 6> grad{};
  double loss = homography_parallelism(current, lanes, &grad);
  fit.h = current;
  fit.loss = fit.initial_loss = loss;
  double lr = options.lr;
  int increases = 0;

  for (int step = 0; step < options.steps && fit.loss > options.tolerance; ++step) {
    fit.steps_run = step + 1;
    Homography next = current;
    // Gauge components of the gradient are dropped; see normalize_gauge.
    next.h[5] -= lr * scales[5] * scales[5] * grad[5];
    if (!admissible(next, lanes, ref_sign, options.min_abs_det)) {
      lr *= 0.5;
      continue;
    }
    next = normalize_gauge(next, lanes, scales[2]);
    std::array<double, 6> next_grad{};
    const double next_loss = homography_parallelism(next, lanes, &next_grad);
    if (!std::isfinite(next_loss)) {
      lr *= 0.5;
      continue;
    }
    if (next_loss > loss) {
      lr *= 0.5;
      if (++increases >= 50) {
        throw Error(ErrorCode::kDivergedOptimization,
                    "parallelism loss increased for 50 consecutive steps");
      }
    } else {
      lr *= 1.2;
      increases = 0;
    }
    current = next;
    loss = next_loss;
    grad = next_grad;
    if (loss < fit.loss) {
      fit.loss = loss;
      fit.h = current;
    }
  }
  return fit;
}

HomographyFit optimize_homography(std::span<const LanePolyline> lanes, const ImageSpec& spec,
                                  const Homography& init, const HomographyFitOptions& options) {
  const std::vector<double> ys = spec.rows();
  std::vector<std::vector<Point2>> pts;
  pts.reserve(lanes.size());
  for (const LanePolyline& lane : lanes) pts.push_back(lane.points(ys));
  return optimize_homography(pts, init, options);
}

}  // namespace lanestruct
