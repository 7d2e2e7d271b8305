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

#include "lanestruct/error.hpp"
#include "lanestruct/trainer.hpp"

namespace lanestruct {

namespace {

struct Camera {
  double horizon = 0.0;
  double vp_x = 0.0;
  Homography h;
};

// Image x of the ground line x' = d at row y, from
// (h1 x + h2 y + h3) / (h6 y + 1) = d.
double image_x(const Homography& h, double d, double y) {
  return (d * (h.h[5] * y + 1.0) - h.h[1] * y - h.h[2]) / h.h[0];
}

Camera random_camera(std::mt19937_64& rng, const ImageSpec& spec) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Camera cam;
  cam.horizon = spec.height * (0.28 + 0.12 * u(rng));
  cam.vp_x = spec.width * (0.4 + 0.2 * u(rng));
  const double shear = -0.3 + 0.6 * u(rng);
  Homography& h = cam.h;
  h.h[0] = 1.0;
  h.h[1] = shear;
  h.h[2] = -cam.vp_x - shear * cam.horizon;
  h.h[3] = -0.3 + 0.6 * u(rng);
  h.h[4] = cam.horizon * (0.5 + u(rng));
  h.h[5] = -1.0 / cam.horizon;
  return cam;
}

// Key-point rows below the horizon margin where the lane is inside the image.
RowMask visible_rows(const Homography& h, double d, double horizon, const ImageSpec& spec) {
  RowMask valid(static_cast<std::size_t>(spec.key_points), 0);
  const int start = first_visible_row(horizon, spec);
  for (int i = start; i < spec.key_points; ++i) {
    const double x = image_x(h, d, spec.row_y(i));
    valid[static_cast<std::size_t>(i)] = x >= 0.0 && x <= spec.width - 1.0;
  }
  return valid;
}

int count(const RowMask& m) { return static_cast<int>(std::count(m.begin(), m.end(), 1)); }

}  // namespace

int first_visible_row(double vp_y, const ImageSpec& spec) {
  const double y0 = vp_y + kHorizonMarginFraction * (spec.height - vp_y);
  const double step = static_cast<double>(spec.height) / (spec.key_points - 1);
  const int i = static_cast<int>(std::ceil(y0 / step - 1e-9));
  return std::clamp(i, 0, spec.key_points);
}

SyntheticScene generate_scene(std::uint64_t seed, const ImageSpec& spec, int n_lanes,
                              double noise_px) {
  spec.validate();
  if (n_lanes < 2 || n_lanes > 8) {
    throw Error(ErrorCode::kInvalidArgument, "n_lanes must be in [2, 8]");
  }
  if (!(noise_px >= 0.0) || !std::isfinite(noise_px)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_px must be finite and non-negative");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Camera cam = random_camera(rng, spec);
  const Homography& h = cam.h;

  SyntheticScene scene;
  scene.spec = spec;
  scene.seed = seed;
  scene.homography_true = h;
  scene.vp_true = {cam.vp_x, cam.horizon, n_lanes};

  const double bottom = spec.height;
  const double w_bottom = h.h[5] * bottom + 1.0;
  const double left = -0.2 * spec.width;
  const double slot = 1.4 * spec.width / n_lanes;
  for (int k = 0; k < n_lanes; ++k) {
    // The ground offset is chosen through the lane's x at the image bottom.
    auto offset_for = [&](double bx) { return (h.h[0] * bx + h.h[1] * bottom + h.h[2]) / w_bottom; };
    double d = 0.0;
    RowMask valid;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      d = offset_for(left + (k + 0.3 + 0.4 * u(rng)) * slot);
      valid = visible_rows(h, d, cam.horizon, spec);
      ok = count(valid) >= kMinSceneLaneRows;
    }
    if (!ok) {
      const double bx = std::clamp(left + (k + 0.5) * slot, 0.0, spec.width - 1.0);
      d = offset_for(bx);
      valid = visible_rows(h, d, cam.horizon, spec);
    }
    LanePolyline lane;
    lane.valid = valid;
    lane.xs.assign(static_cast<std::size_t>(spec.key_points), 0.0);
    for (int i = 0; i < spec.key_points; ++i) {
      if (valid[static_cast<std::size_t>(i)]) lane.xs[static_cast<std::size_t>(i)] = image_x(h, d, spec.row_y(i));
    }
    scene.lanes.push_back(std::move(lane));
    scene.ground_offsets.push_back(d);
  }

  if (noise_px > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_px);
    for (LanePolyline& lane : scene.lanes) {
      for (std::size_t i = 0; i < lane.xs.size(); ++i) {
        if (!lane.valid[i]) continue;
        lane.xs[i] = std::clamp(lane.xs[i] + noise(rng), 0.0, spec.width - 1.0);
      }
    }
  }
  return scene;
}

}  // namespace lanestruct
