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

#include "lanestruct/anchoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "lanestruct/error.hpp"

namespace lanestruct {

VanishingPoint approximate_vp(std::span<const BoxLineCode> lanes, VpMethod method) {
  if (lanes.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "vanishing point needs at least two lanes");
  }

  if (method == VpMethod::kLeastSquares) {
    double saa = 0, sab = 0, sbb = 0, sac = 0, sbc = 0;
    for (const BoxLineCode& l : lanes) {
      const auto& [a, b, c, theta] = l.center;
      saa += a * a;
      sab += a * b;
      sbb += b * b;
      sac += a * c;
      sbc += b * c;
    }
    const double det = saa * sbb - sab * sab;
    if (std::abs(det) < kParallelEps * static_cast<double>(lanes.size())) {
      throw Error(ErrorCode::kNoIntersections, "all center lines are near-parallel");
    }
    return {(-sac * sbb + sbc * sab) / det, (-sbc * saa + sac * sab) / det,
            static_cast<int>(lanes.size())};
  }

  double sx = 0, sy = 0;
  int support = 0;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const CenterLineParams& li = lanes[i].center;
    for (std::size_t j = i + 1; j < lanes.size(); ++j) {
      const CenterLineParams& lj = lanes[j].center;
      const double det = li.a * lj.b - lj.a * li.b;
      if (std::abs(det) < kParallelEps) continue;
      sx += (li.b * lj.c - lj.b * li.c) / det;
      sy += (lj.a * li.c - li.a * lj.c) / det;
      ++support;
    }
  }
  if (support == 0) {
    throw Error(ErrorCode::kNoIntersections, "all center lines are near-parallel");
  }
  return {sx / support, sy / support, support};
}

VpMask vp_mask(const VanishingPoint& vp, const ImageSpec& spec, int scale, double radius_px) {
  spec.validate();
  if (!(radius_px > 0.0) || scale < 1) {
    throw Error(ErrorCode::kInvalidArgument, "vp mask needs radius > 0 and scale >= 1");
  }
  const int rows = (spec.height + scale - 1) / scale;
  const int cols = (spec.width + scale - 1) / scale;
  VpMask mask;
  mask.grid = Grid<std::uint8_t>(rows, cols, 0);
  mask.radius_px = radius_px;
  mask.scale = scale;
  bool any = false;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double cx = (c + 0.5) * scale;
      const double cy = (r + 0.5) * scale;
      if (std::hypot(cx - vp.x, cy - vp.y) <= radius_px) {
        mask.grid(r, c) = 1;
        any = true;
      }
    }
  }
  mask.empty = !any;
  mask.vp_outside = !(vp.x >= 0 && vp.x <= spec.width && vp.y >= 0 && vp.y <= spec.height);
  return mask;
}

void AnchorParams::validate() const {
  if (!(s_anchor > 0.0) || !(w_anchor >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "anchor params need s_anchor > 0 and w_anchor >= 0");
  }
  const double steps = w_anchor / s_anchor;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "w_anchor must be divisible by s_anchor");
  }
  if (!(a_anchor > 0.0 && a_anchor < 180.0)) {
    throw Error(ErrorCode::kInvalidArgument, "a_anchor must lie in (0, 180)");
  }
}

std::vector<double> anchor_angles(double a_anchor) {
  std::vector<double> angles;
  for (int k = 1;; ++k) {
    const double angle = k * a_anchor;
    if (angle >= 180.0 - 1e-9) break;
    angles.push_back(angle);
  }
  return angles;
}

AnchorSet generate_anchors(const VanishingPoint& vp, const AnchorParams& params,
                           const ImageSpec& spec) {
  params.validate();
  spec.validate();
  const int steps = static_cast<int>(std::lround(params.w_anchor / params.s_anchor));
  const std::vector<double> angles = anchor_angles(params.a_anchor);
  const std::vector<double> ys = spec.rows();

  AnchorSet set;
  set.point_count = (steps + 1) * (steps + 1);
  set.angle_count = static_cast<int>(angles.size());
  set.anchors.reserve(static_cast<std::size_t>(set.point_count) * angles.size());
  for (int j = 0; j <= steps; ++j) {
    for (int i = 0; i <= steps; ++i) {
      const Point2 origin{vp.x + (i - 0.5 * steps) * params.s_anchor,
                          vp.y + (j - 0.5 * steps) * params.s_anchor};
      const int point_index = j * (steps + 1) + i;
      for (std::size_t k = 0; k < angles.size(); ++k) {
        Anchor anchor;
        anchor.point_index = point_index;
        anchor.angle_index = static_cast<int>(k);
        anchor.origin = origin;
        anchor.theta = angles[k];
        anchor.line = CenterLineParams::through(origin, angles[k]);
        anchor.sampled_xs.resize(ys.size());
        for (std::size_t r = 0; r < ys.size(); ++r) anchor.sampled_xs[r] = anchor.line.x_at(ys[r]);
        set.anchors.push_back(std::move(anchor));
      }
    }
  }
  return set;
}

double anchor_lane_cost(const Anchor& anchor, const LanePolyline& gt) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < gt.xs.size(); ++i) {
    if (!gt.valid[i]) continue;
    sum += std::abs(anchor.sampled_xs[i] - gt.xs[i]);
    ++n;
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::infinity();
}

AnchorTargets assign_targets(const AnchorSet& anchors, std::span<const LanePolyline> gt,
                             const AssignOptions& options) {
  const std::size_t n = anchors.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "anchor set is empty");
  if (gt.size() > n) {
    throw Error(ErrorCode::kAssignmentOverflow,
                std::to_string(gt.size()) + " lanes for " + std::to_string(n) + " anchors");
  }
  const std::size_t rows = anchors.anchors.front().sampled_xs.size();
  for (const LanePolyline& lane : gt) validate_lane(lane, static_cast<int>(rows));

  std::vector<double> cost(gt.size() * n);
  std::vector<std::tuple<double, std::size_t, std::size_t>> order;
  order.reserve(cost.size());
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t a = 0; a < n; ++a) {
      cost[g * n + a] = anchor_lane_cost(anchors.anchors[a], gt[g]);
      order.emplace_back(cost[g * n + a], a, g);
    }
  }
  std::sort(order.begin(), order.end());

  AnchorTargets t;
  t.gconf.assign(n, 0);
  t.gdx.assign(n, {});
  t.valid.assign(n, {});
  t.len.assign(n, 0);
  t.gt_of_anchor.assign(n, -1);
  t.anchor_of_gt.assign(gt.size(), -1);

  auto make_positive = [&](std::size_t a, std::size_t g) {
    const Anchor& anchor = anchors.anchors[a];
    const LanePolyline& lane = gt[g];
    t.gconf[a] = 1;
    t.gt_of_anchor[a] = static_cast<int>(g);
    t.valid[a] = lane.valid;
    t.len[a] = lane.valid_count();
    t.gdx[a].assign(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      if (lane.valid[i]) t.gdx[a][i] = lane.xs[i] - anchor.sampled_xs[i];
    }
  };

  std::size_t assigned = 0;
  for (const auto& [c, a, g] : order) {
    if (assigned == gt.size()) break;
    if (t.anchor_of_gt[g] >= 0 || t.gt_of_anchor[a] >= 0) continue;
    t.anchor_of_gt[g] = static_cast<int>(a);
    make_positive(a, g);
    ++assigned;
  }

  if (options.positive_radius_px > 0.0 && !gt.empty()) {
    for (std::size_t a = 0; a < n; ++a) {
      if (t.gconf[a]) continue;
      std::size_t best = 0;
      for (std::size_t g = 1; g < gt.size(); ++g) {
        if (cost[g * n + a] < cost[best * n + a]) best = g;
      }
      if (cost[best * n + a] <= options.positive_radius_px) make_positive(a, best);
    }
  }
  return t;
}

double proposal_distance(const ScoredProposal& p, const ScoredProposal& q) {
  const std::size_t rows = std::min(p.xs.size(), q.xs.size());
  double sum = 0.0;
  int shared = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (p.valid[i] && q.valid[i]) {
      sum += std::abs(p.xs[i] - q.xs[i]);
      ++shared;
    }
  }
  return shared < 2 ? std::numeric_limits<double>::infinity() : sum / shared;
}

std::vector<ScoredProposal> line_nms(std::span<const ScoredProposal> proposals,
                                     const NmsParams& params) {
  if (params.dist_thresh_px < 0 || params.conf_thresh < 0) {
    throw Error(ErrorCode::kInvalidArgument, "NMS thresholds must be non-negative");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (proposals[i].conf >= params.conf_thresh) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return proposals[i].conf > proposals[j].conf;
  });

  std::vector<ScoredProposal> kept;
  for (std::size_t idx : order) {
    const ScoredProposal& p = proposals[idx];
    const bool separated = std::all_of(kept.begin(), kept.end(), [&](const ScoredProposal& k) {
      return proposal_distance(p, k) > params.dist_thresh_px;
    });
    if (separated) kept.push_back(p);
  }
  return kept;
}

}  // namespace lanestruct
