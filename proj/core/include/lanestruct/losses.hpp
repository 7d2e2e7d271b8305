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

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lanestruct/geometry.hpp"
#include "lanestruct/lane_repr.hpp"
#include "lanestruct/structures.hpp"

namespace lanestruct {

// Scalar loss with gradients keyed by input name. Every gradient has the
// shape (flattened) of the input it belongs to.
struct LossValue {
  double value = 0.0;
  std::map<std::string, std::vector<double>> gradients;
  std::map<std::string, double> components;  // filled by total_loss
  bool too_few_lanes = false;

  const std::vector<double>& grad(const std::string& name) const { return gradients.at(name); }
};

// Per-term weights of the total objective.
struct LossWeights {
  double vp = 1.0;          // L_V
  double confidence = 1.0;  // L_C
  double regression = 1.0;  // L_R
  double pixel = 1.0;       // L_P
  double lane = 1.0;        // L_L
  double image = 1.0;       // L_I

  void validate() const;
};

// Per-proposal arrays of length `rows`, proposal-major.
struct ProposalMatrix {
  int proposals = 0;
  int rows = 0;
  std::vector<double> data;

  ProposalMatrix() = default;
  ProposalMatrix(int n, int p, double fill = 0.0)
      : proposals(n), rows(p), data(static_cast<std::size_t>(n) * p, fill) {}

  double& operator()(int i, int r) { return data[static_cast<std::size_t>(i) * rows + r]; }
  double operator()(int i, int r) const { return data[static_cast<std::size_t>(i) * rows + r]; }
  bool same_shape(const ProposalMatrix& o) const {
    return proposals == o.proposals && rows == o.rows;
  }
};

inline constexpr double kBceEps = 1e-7;

// Mean binary cross-entropy over cells; gradient "pred".
LossValue bce_mask_loss(const Grid<double>& pred, const Grid<double>& target);

// Summed binary cross-entropy over proposals; gradient "conf". Optional
// per-proposal weights (empty = all ones) let callers ignore proposals.
LossValue confidence_loss(std::span<const double> conf, std::span<const std::uint8_t> gconf,
                          std::span<const double> weights = {});

double smooth_l1(double d);
double smooth_l1_grad(double d);

// Sum of smooth_l1(dx - gdx) over positive proposals and their valid rows;
// gradient "dx".
LossValue regression_loss(const ProposalMatrix& dx, const ProposalMatrix& gdx,
                          std::span<const RowMask> valid, std::span<const std::uint8_t> positive);

// Sum over ordered pairs i != j of |a_i b_j - a_j b_i|; gradient "lines"
// laid out as (a, b, c) per line. Fewer than two lines give 0 and set
// too_few_lanes.
LossValue parallelism_loss(std::span<const BevLine> lines);

// Sum over positive proposals and valid rows of
// |xs_pred - xs_gt| * (1 + E(xs_gt, y)); gradient "xs_pred".
LossValue attention_regression_loss(const ProposalMatrix& xs_pred, const ProposalMatrix& xs_gt,
                                    std::span<const RowMask> valid,
                                    std::span<const std::uint8_t> positive,
                                    std::span<const double> ys, const AttentionMap& pam);

// Everything the six terms consume. The regression and attention terms share
// `dx`; the attention term evaluates absolute positions anchor_xs + dx. When
// `offset_index` is non-empty, dx, gdx, anchor_xs and valid hold only the
// proposals it lists (in that order) and the rest carry no offsets.
struct LossInputs {
  Grid<double> vp_pred, vp_target;
  std::vector<double> conf;
  std::vector<std::uint8_t> gconf;
  std::vector<double> conf_weights;
  ProposalMatrix dx, gdx, anchor_xs;
  std::vector<RowMask> valid;
  std::vector<int> offset_index;
  Grid<double> seg_pred, seg_target;
  std::vector<BevLine> bev_lines;
  AttentionMap pam;
  std::vector<double> ys;
};

// Weighted sum of the six terms. Gradients: "vp_pred", "conf", "dx",
// "seg_pred", "bev_lines"; per-term values in `components` under
// "L_V", "L_C", "L_R", "L_P", "L_L", "L_I".
LossValue total_loss(const LossInputs& in, const LossWeights& weights = {});

// ---------------------------------------------------------------------------
// Homography recovery by minimizing the parallelism loss
// ---------------------------------------------------------------------------

// Parallelism loss of the lanes after projection through h, with the
// gradient over the six homography parameters. Each lane is a list of image
// points.
double homography_parallelism(const Homography& h, std::span<const std::vector<Point2>> lanes,
                              std::array<double, 6>* grad = nullptr);

// Identity-like start whose horizon sits halfway between the image top and
// the topmost lane point, so every lane point starts below it.
Homography initial_ipm_guess(std::span<const std::vector<Point2>> lanes);

struct HomographyFitOptions {
  int steps = 2000;
  double lr = 1e-3;
  double min_abs_det = 1e-6;
  double tolerance = 1e-14;  // stop once the loss reaches this
};

struct HomographyFit {
  Homography h;
  double loss = 0.0;
  double initial_loss = 0.0;
  int steps_run = 0;
  bool too_few_lanes = false;
};

// Gradient descent on the homography parameters. h1..h5 only apply an affine
// map to the bird's-eye view, which cannot change parallelism but can shrink
// every residual toward zero by collapsing the view, so they are re-fixed
// after every step to whiten the projected lane points and their gradient
// components are dropped; h6 descends in image-scale units. The step halves
// after every increase, and steps that carry a lane point across the horizon
// or push |det| below min_abs_det are rejected. Returns the best iterate.
// Throws kDivergedOptimization after 50 consecutive increases.
HomographyFit optimize_homography(std::span<const std::vector<Point2>> lanes,
                                  const Homography& init,
                                  const HomographyFitOptions& options = {});
HomographyFit optimize_homography(std::span<const LanePolyline> lanes, const ImageSpec& spec,
                                  const Homography& init,
                                  const HomographyFitOptions& options = {});

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

// max_k |analytic_k - fd_k| / max(|analytic_k|, |fd_k|, floor) with central
// differences of the given step. `evaluations` counts calls of f.
struct FdComparison {
  double max_rel_error = 0.0;
  int evaluations = 0;
};
FdComparison compare_with_finite_differences(const std::function<double(std::span<const double>)>& f,
                                             std::span<const double> x,
                                             std::span<const double> analytic, double step = 1e-5,
                                             double floor = 1e-6);

struct GradCheckResult {
  std::string loss;
  double max_rel_error = 0.0;
  int evaluations = 0;
  int points = 0;
  bool passed = false;
};

// Runs the central-difference check at `points` random inputs per loss term
// (and for the total objective and the homography objective).
std::vector<GradCheckResult> run_gradient_checks(int points = 100, std::uint64_t seed = 7,
                                                 double tolerance = 1e-4);

}  // namespace lanestruct
