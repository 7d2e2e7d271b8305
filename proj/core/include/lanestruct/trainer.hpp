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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lanestruct/anchoring.hpp"
#include "lanestruct/lane_repr.hpp"
#include "lanestruct/losses.hpp"
#include "lanestruct/structures.hpp"

namespace lanestruct {

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

struct SyntheticScene {
  ImageSpec spec;
  Homography homography_true;
  std::vector<LanePolyline> lanes;  // left to right
  std::vector<double> ground_offsets;  // bird's-eye x of every lane
  VanishingPoint vp_true;
  std::uint64_t seed = 0;
};

// Lanes start this far below the horizon, as a fraction of the distance from
// the horizon to the image bottom.
inline constexpr double kHorizonMarginFraction = 0.1;
inline constexpr int kMinSceneLaneRows = 16;

// First key-point row at or below the horizon margin for a horizon at vp_y.
int first_visible_row(double vp_y, const ImageSpec& spec);

// Parallel ground lines x' = d_k pulled back into the image through a random
// valid homography, sampled on the key-point rows below the horizon margin
// where they are inside the image, then perturbed by N(0, noise_px) in x and
// clipped to the image. Deterministic per seed. Throws kInvalidArgument
// unless 2 <= n_lanes <= 8 and noise_px >= 0.
SyntheticScene generate_scene(std::uint64_t seed, const ImageSpec& spec, int n_lanes,
                              double noise_px);

// ---------------------------------------------------------------------------
// Features and the linear scorer
// ---------------------------------------------------------------------------

struct FeatureOptions {
  int scale = 4;             // full-resolution pixels per feature cell
  double mask_width = 12.0;  // width of the lane-mask channel, in pixels
};

inline constexpr int kFeatureChannels = 4;  // x ramp, y ramp, lane mask, constant

// Fixed synthetic feature map for a set of lanes: x / W, y / H, the lane
// raster and 1 at every cell center, modulated by the same raster.
FeatureGrid scene_features(std::span<const LanePolyline> lanes, const ImageSpec& spec,
                           const FeatureOptions& options = {});

// For every key-point row, the channels sampled bilinearly at the anchor's
// (x, y) in grid coordinates x / scale - 0.5; row-major (row, channel).
std::vector<double> extract_descriptor(const FeatureGrid& f, const Anchor& anchor,
                                       const ImageSpec& spec, int scale);

// Output 0 is the confidence logit, outputs 1..P are the per-row offsets.
struct ScorerParams {
  int descriptor_dim = 0;
  int outputs = 0;                  // 1 + P
  std::vector<double> weight;       // descriptor_dim x outputs, row-major
  std::vector<double> bias;         // outputs

  ScorerParams() = default;
  ScorerParams(int dim, int rows)
      : descriptor_dim(dim),
        outputs(1 + rows),
        weight(static_cast<std::size_t>(dim) * (1 + rows), 0.0),
        bias(static_cast<std::size_t>(1 + rows), 0.0) {}

  std::size_t size() const { return weight.size() + bias.size(); }
  bool finite() const;
  // Flat view (weights then bias) for optimizers and gradient checks.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

void write_params(const ScorerParams& params, std::ostream& out);
// Throws kParseError on a bad header, version or truncated blob.
ScorerParams read_params(std::istream& in);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

enum class Optimizer {
  kAdam,
  kGradientDescent,
};

struct TrainConfig {
  ImageSpec spec;
  AnchorParams anchors;
  LossWeights weights;
  int epochs = 500;
  double lr = 0.01;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  int warmup = 50;   // epochs exempt from the monotonicity flag
  FeatureOptions features;
  double positive_radius_px = 5.0;  // extra positives within this mean distance
  double ignore_radius_px = 9.0;    // confidence ignored between the two radii
  int vp_scale = 16;
  double vp_radius_px = 16.0;
  int seg_scale = 4;
  double seg_width_px = 4.0;
  int pam_scale = 4;
  double pam_sigma_x = 0.0;  // 0 means W / 4
  double pam_sigma_y = 0.0;  // 0 means H / 4
  bool pam_inverted = false;
  double init_std = 0.01;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double l_v = 0, l_c = 0, l_r = 0, l_p = 0, l_l = 0, l_i = 0, total = 0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  bool flagged = false;     // total rose over some 10-epoch window after warmup
  int first_flagged_epoch = -1;
};

void write_log_csv(const TrainingLog& log, std::ostream& out);

// Per-scene tensors that stay fixed during training.
struct PreparedScene {
  VanishingPoint vp;
  AnchorSet anchors;
  AnchorTargets targets;
  std::vector<double> descriptors;  // anchors x descriptor_dim
  int descriptor_dim = 0;
  std::vector<double> conf_weights;
  Grid<double> vp_target;
  Grid<double> seg_target;
  AttentionMap pam;
  Homography ipm;
  // Offset targets of the positive anchors, in `positives` order.
  std::vector<int> positives;
  ProposalMatrix gdx;
  ProposalMatrix anchor_xs;
  std::vector<RowMask> valid;
};

PreparedScene prepare_scene(const SyntheticScene& scene, const TrainConfig& config);

// Total objective over all scenes (mean over scenes) as a function of the
// scorer and the per-scene VP and segmentation logit grids.
class TrainingProblem {
 public:
  TrainingProblem(std::span<const SyntheticScene> scenes, const TrainConfig& config);

  std::size_t scene_count() const { return prepared_.size(); }
  const PreparedScene& scene(std::size_t i) const { return prepared_[i]; }
  int descriptor_dim() const { return descriptor_dim_; }
  int rows() const { return config_.spec.key_points; }

  // Free logit grids (VP grids of all scenes, then segmentation grids).
  std::vector<double>& aux() { return aux_; }
  const std::vector<double>& aux() const { return aux_; }

  // Loss with optional gradients for the scorer and the aux grids. Fills the
  // epoch record components when given.
  double evaluate(const ScorerParams& params, ScorerParams* grad_params,
                  std::vector<double>* grad_aux, EpochRecord* record = nullptr) const;

 private:
  double evaluate_scene(std::size_t s, const ScorerParams& params, ScorerParams* grad,
                        std::vector<double>* grad_aux, EpochRecord* record) const;

  TrainConfig config_;
  std::vector<PreparedScene> prepared_;
  std::vector<std::size_t> aux_offsets_;  // per scene: vp grid start, seg grid start
  std::vector<double> aux_;
  int descriptor_dim_ = 0;
};

struct TrainResult {
  ScorerParams params;
  TrainingLog log;
};

// Full-batch descent (Adam or plain gradient steps) on the total objective. Throws kDivergedTraining when the
// loss or the parameters stop being finite.
TrainResult train(std::span<const SyntheticScene> scenes, const TrainConfig& config);

// Largest relative error between the analytic scorer gradient and central
// differences over `samples` randomly chosen parameters.
double scorer_gradient_check(const TrainingProblem& problem, const ScorerParams& params,
                             int samples, std::uint64_t seed, double step = 1e-6);

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

// Scores every anchor, keeps rows from the horizon margin down while inside
// the image, and applies line NMS.
std::vector<ScoredProposal> predict_lanes(const PreparedScene& prepared, const ScorerParams& params,
                                          const ImageSpec& spec, const NmsParams& nms = {});

LanePolyline proposal_to_lane(const ScoredProposal& p);

}  // namespace lanestruct
