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
#include "lanestruct/lane_repr.hpp"

namespace lanestruct {

struct VanishingPoint {
  double x = 0.0;
  double y = 0.0;
  int support = 0;  // number of line pairs (or lines) used
};

enum class VpMethod {
  kPairwiseMean,  // mean of all pairwise center-line intersections
  kLeastSquares,  // point minimizing the summed squared line distances
};

// Throws kInvalidArgument for fewer than two lanes and kNoIntersections
// when every pair of center lines is near-parallel.
VanishingPoint approximate_vp(std::span<const BoxLineCode> lanes,
                              VpMethod method = VpMethod::kPairwiseMean);

// |a_i b_j - a_j b_i| below this (unit normals) counts as parallel.
inline constexpr double kParallelEps = 1e-6;

struct VpMask {
  Grid<std::uint8_t> grid;
  double radius_px = 16.0;
  int scale = 1;
  bool empty = false;
  bool vp_outside = false;  // VP not inside the image rectangle
};

// Cell (r, c) is set iff its full-resolution center ((c + 0.5) * scale,
// (r + 0.5) * scale) is within radius_px of the VP. The grid has
// ceil(H / scale) x ceil(W / scale) cells.
VpMask vp_mask(const VanishingPoint& vp, const ImageSpec& spec, int scale = 16,
               double radius_px = 16.0);

struct AnchorParams {
  double w_anchor = 40.0;
  double s_anchor = 5.0;
  double a_anchor = 5.0;

  void validate() const;
};

struct Anchor {
  int point_index = 0;
  int angle_index = 0;
  Point2 origin;
  double theta = 90.0;
  CenterLineParams line;
  std::vector<double> sampled_xs;  // line x at every key-point row
};

struct AnchorSet {
  std::vector<Anchor> anchors;
  int point_count = 0;
  int angle_count = 0;

  std::size_t size() const { return anchors.size(); }
};

// Angles k * a_anchor for k = 1, 2, ... strictly inside (0, 180).
std::vector<double> anchor_angles(double a_anchor);

// One anchor per (grid point, angle); grid points are vp + offsets on a
// (w/s + 1)^2 lattice centred on the VP, ordered row-major (y outer).
AnchorSet generate_anchors(const VanishingPoint& vp, const AnchorParams& params,
                           const ImageSpec& spec);

struct AnchorTargets {
  std::vector<std::uint8_t> gconf;       // per anchor
  std::vector<std::vector<double>> gdx;  // per anchor, length P; empty if negative
  std::vector<RowMask> valid;            // per anchor; empty if negative
  std::vector<int> len;                  // per anchor valid-row count
  std::vector<int> gt_of_anchor;         // -1 for negatives
  std::vector<int> anchor_of_gt;         // primary anchor of every GT lane
};

// Mean |anchor.sampled_xs_i - gt.xs_i| over the GT's valid rows.
double anchor_lane_cost(const Anchor& anchor, const LanePolyline& gt);

struct AssignOptions {
  // When positive, anchors not chosen as a primary match but within this
  // mean distance of a GT lane become extra positives for their closest GT.
  double positive_radius_px = 0.0;
};

// Each GT takes the cheapest free anchor; conflicts are resolved greedily in
// increasing cost order, ties toward the lower anchor index then the lower
// GT index. Throws kAssignmentOverflow if GT lanes outnumber anchors.
AnchorTargets assign_targets(const AnchorSet& anchors, std::span<const LanePolyline> gt,
                             const AssignOptions& options = {});

struct ScoredProposal {
  double conf = 0.0;
  std::vector<double> xs;
  RowMask valid;
  int len = 0;
};

// Mean |xs_i - xs'_i| over rows valid in both; +inf below two shared rows.
double proposal_distance(const ScoredProposal& p, const ScoredProposal& q);

struct NmsParams {
  double dist_thresh_px = 15.0;
  double conf_thresh = 0.5;
};

std::vector<ScoredProposal> line_nms(std::span<const ScoredProposal> proposals,
                                     const NmsParams& params = {});

}  // namespace lanestruct
