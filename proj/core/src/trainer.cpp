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

#include "lanestruct/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "lanestruct/error.hpp"

namespace lanestruct {

namespace {

constexpr char kParamsMagic[8] = {'L', 'S', 'T', 'R', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kParamsVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw Error(ErrorCode::kParseError, "params blob is truncated");
  }
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | bytes[k];
  return v;
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw Error(ErrorCode::kConfigError, std::string(key) + ": " + what);
}

Grid<double> to_double_grid(const Grid<std::uint8_t>& g) {
  Grid<double> out(g.rows, g.cols, 0.0);
  for (std::size_t k = 0; k < g.data.size(); ++k) out.data[k] = g.data[k];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureGrid scene_features(std::span<const LanePolyline> lanes, const ImageSpec& spec,
                           const FeatureOptions& options) {
  const PixelMask mask = rasterize_lanes(lanes, spec, options.scale, options.mask_width);
  FeatureGrid f(mask.grid.rows, mask.grid.cols, kFeatureChannels);
  const double s = options.scale;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      f.at(r, c, 0) = (c + 0.5) * s / spec.width;
      f.at(r, c, 1) = (r + 0.5) * s / spec.height;
      f.at(r, c, 2) = mask.grid(r, c);
      f.at(r, c, 3) = 1.0;
    }
  }
  return modulate_features(f, mask);
}

std::vector<double> extract_descriptor(const FeatureGrid& f, const Anchor& anchor,
                                       const ImageSpec& spec, int scale) {
  std::vector<double> out(static_cast<std::size_t>(spec.key_points) * f.channels);
  const double s = scale;
  for (int i = 0; i < spec.key_points; ++i) {
    const double gx = anchor.sampled_xs[static_cast<std::size_t>(i)] / s - 0.5;
    const double gy = spec.row_y(i) / s - 0.5;
    for (int ch = 0; ch < f.channels; ++ch) {
      out[static_cast<std::size_t>(i) * f.channels + ch] = sample_bilinear(f, gx, gy, ch);
    }
  }
  return out;
}

bool ScorerParams::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  return std::all_of(weight.begin(), weight.end(), ok) && std::all_of(bias.begin(), bias.end(), ok);
}

std::vector<double> ScorerParams::flatten() const {
  std::vector<double> flat(weight);
  flat.insert(flat.end(), bias.begin(), bias.end());
  return flat;
}

void ScorerParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw Error(ErrorCode::kShapeMismatch, "flat parameter length mismatch");
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(weight.size()), weight.begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(weight.size()), flat.end(), bias.begin());
}

void write_params(const ScorerParams& params, std::ostream& out) {
  out.write(kParamsMagic, sizeof(kParamsMagic));
  put_u64(out, kParamsVersion);
  put_u64(out, static_cast<std::uint64_t>(params.descriptor_dim));
  put_u64(out, static_cast<std::uint64_t>(params.outputs));
  for (double v : params.weight) put_u64(out, std::bit_cast<std::uint64_t>(v));
  for (double v : params.bias) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw Error(ErrorCode::kIoError, "failed to write params blob");
}

ScorerParams read_params(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kParamsMagic, 8) != 0) {
    throw Error(ErrorCode::kParseError, "not a params blob");
  }
  const std::uint64_t version = get_u64(in);
  if (version != kParamsVersion) {
    throw Error(ErrorCode::kParseError, "unsupported params version " + std::to_string(version));
  }
  const std::uint64_t dim = get_u64(in);
  const std::uint64_t outputs = get_u64(in);
  if (dim == 0 || outputs < 3 || dim > (1u << 20) || outputs > (1u << 16)) {
    throw Error(ErrorCode::kParseError, "implausible params shape");
  }
  ScorerParams p(static_cast<int>(dim), static_cast<int>(outputs) - 1);
  for (double& v : p.weight) v = std::bit_cast<double>(get_u64(in));
  for (double& v : p.bias) v = std::bit_cast<double>(get_u64(in));
  return p;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  spec.validate();
  anchors.validate();
  weights.validate();
  require(epochs >= 0, "train.epochs", "must be non-negative");
  require(lr >= 0 && std::isfinite(lr), "train.lr", "must be finite and non-negative");
  require(warmup >= 0, "train.warmup", "must be non-negative");
  require(features.scale >= 1, "feature.scale", "must be at least 1");
  require(features.mask_width > 0, "feature.mask_width", "must be positive");
  require(positive_radius_px >= 0, "train.positive_radius", "must be non-negative");
  require(ignore_radius_px >= positive_radius_px, "train.ignore_radius",
          "must be at least train.positive_radius");
  require(vp_scale >= 1, "vp.scale", "must be at least 1");
  require(vp_radius_px > 0, "vp.radius", "must be positive");
  require(seg_scale >= 1, "seg.scale", "must be at least 1");
  require(seg_width_px > 0, "seg.width", "must be positive");
  require(pam_scale >= 1, "pam.scale", "must be at least 1");
  require(pam_sigma_x >= 0 && std::isfinite(pam_sigma_x), "pam.sigma_x", "must be non-negative");
  require(pam_sigma_y >= 0 && std::isfinite(pam_sigma_y), "pam.sigma_y", "must be non-negative");
  require(init_std >= 0 && std::isfinite(init_std), "train.init_std", "must be finite and non-negative");
}

void write_log_csv(const TrainingLog& log, std::ostream& out) {
  out << "epoch,L_V,L_C,L_R,L_P,L_L,L_I,total\n";
  char buf[512];
  for (const EpochRecord& e : log.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                  e.l_v, e.l_c, e.l_r, e.l_p, e.l_l, e.l_i, e.total);
    out << buf;
  }
}

PreparedScene prepare_scene(const SyntheticScene& scene, const TrainConfig& config) {
  const ImageSpec& spec = config.spec;
  if (scene.spec.height != spec.height || scene.spec.width != spec.width ||
      scene.spec.key_points != spec.key_points) {
    throw Error(ErrorCode::kShapeMismatch, "scene image spec differs from the training spec");
  }
  PreparedScene ps;
  std::vector<BoxLineCode> codes;
  for (const LanePolyline& lane : scene.lanes) codes.push_back(encode(lane, spec));
  ps.vp = approximate_vp(codes);
  ps.anchors = generate_anchors(ps.vp, config.anchors, spec);
  ps.targets = assign_targets(ps.anchors, scene.lanes, {config.positive_radius_px});

  const std::size_t n = ps.anchors.size();
  const int rows = spec.key_points;
  ps.conf_weights.assign(n, 1.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (ps.targets.gconf[a]) {
      ps.positives.push_back(static_cast<int>(a));
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const LanePolyline& lane : scene.lanes) {
      best = std::min(best, anchor_lane_cost(ps.anchors.anchors[a], lane));
    }
    if (best <= config.ignore_radius_px) ps.conf_weights[a] = 0.0;
  }

  const FeatureGrid features = scene_features(scene.lanes, spec, config.features);
  ps.descriptor_dim = rows * features.channels;
  ps.descriptors.reserve(n * static_cast<std::size_t>(ps.descriptor_dim));
  for (const Anchor& anchor : ps.anchors.anchors) {
    const std::vector<double> d = extract_descriptor(features, anchor, spec, config.features.scale);
    ps.descriptors.insert(ps.descriptors.end(), d.begin(), d.end());
  }

  ps.vp_target = to_double_grid(vp_mask(ps.vp, spec, config.vp_scale, config.vp_radius_px).grid);
  ps.seg_target = rasterize_lanes(scene.lanes, spec, config.seg_scale, config.seg_width_px).grid;
  const double sx = config.pam_sigma_x > 0 ? config.pam_sigma_x : spec.width / 4.0;
  const double sy = config.pam_sigma_y > 0 ? config.pam_sigma_y : spec.height / 4.0;
  ps.pam = attention_map(ps.vp, spec, config.pam_scale, sx, sy, config.pam_inverted);

  std::vector<std::vector<Point2>> pts;
  const std::vector<double> ys = spec.rows();
  for (const LanePolyline& lane : scene.lanes) pts.push_back(lane.points(ys));
  ps.ipm = initial_ipm_guess(pts);
  try {
    ps.ipm = optimize_homography(pts, ps.ipm).h;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDivergedOptimization) throw;
  }

  const int npos = static_cast<int>(ps.positives.size());
  ps.gdx = ProposalMatrix(npos, rows);
  ps.anchor_xs = ProposalMatrix(npos, rows);
  for (int q = 0; q < npos; ++q) {
    const auto a = static_cast<std::size_t>(ps.positives[static_cast<std::size_t>(q)]);
    for (int r = 0; r < rows; ++r) {
      ps.anchor_xs(q, r) = ps.anchors.anchors[a].sampled_xs[static_cast<std::size_t>(r)];
      ps.gdx(q, r) = ps.targets.gdx[a][static_cast<std::size_t>(r)];
    }
    ps.valid.push_back(ps.targets.valid[a]);
  }
  return ps;
}

// ---------------------------------------------------------------------------

TrainingProblem::TrainingProblem(std::span<const SyntheticScene> scenes, const TrainConfig& config)
    : config_(config) {
  config_.validate();
  if (scenes.empty()) throw Error(ErrorCode::kInvalidArgument, "training needs at least one scene");
  std::size_t offset = 0;
  for (const SyntheticScene& scene : scenes) {
    prepared_.push_back(prepare_scene(scene, config_));
    const PreparedScene& ps = prepared_.back();
    aux_offsets_.push_back(offset);
    offset += ps.vp_target.data.size();
    aux_offsets_.push_back(offset);
    offset += ps.seg_target.data.size();
  }
  descriptor_dim_ = prepared_.front().descriptor_dim;
  aux_.assign(offset, 0.0);
}

double TrainingProblem::evaluate(const ScorerParams& params, ScorerParams* grad_params,
                                 std::vector<double>* grad_aux, EpochRecord* record) const {
  if (params.descriptor_dim != descriptor_dim_ || params.outputs != 1 + rows()) {
    throw Error(ErrorCode::kShapeMismatch, "scorer shape does not match the descriptors");
  }
  if (grad_params) *grad_params = ScorerParams(descriptor_dim_, rows());
  if (grad_aux) grad_aux->assign(aux_.size(), 0.0);
  if (record) *record = EpochRecord{};
  double total = 0.0;
  // Fixed scene order keeps the reduction deterministic.
  for (std::size_t s = 0; s < prepared_.size(); ++s) {
    total += evaluate_scene(s, params, grad_params, grad_aux, record);
  }
  const double inv = 1.0 / static_cast<double>(prepared_.size());
  if (grad_params) {
    for (double& g : grad_params->weight) g *= inv;
    for (double& g : grad_params->bias) g *= inv;
  }
  if (grad_aux) {
    for (double& g : *grad_aux) g *= inv;
  }
  if (record) {
    for (double* v : {&record->l_v, &record->l_c, &record->l_r, &record->l_p, &record->l_l,
                      &record->l_i}) {
      *v *= inv;
    }
    record->total = total * inv;
  }
  return total * inv;
}

double TrainingProblem::evaluate_scene(std::size_t s, const ScorerParams& params,
                                       ScorerParams* grad, std::vector<double>* grad_aux,
                                       EpochRecord* record) const {
  const PreparedScene& ps = prepared_[s];
  const ImageSpec& spec = config_.spec;
  const int n = static_cast<int>(ps.anchors.size());
  const int rows = spec.key_points;
  const int dim = descriptor_dim_;
  const int outs = params.outputs;
  auto desc = [&](int a) { return ps.descriptors.data() + static_cast<std::size_t>(a) * dim; };

  LossInputs in;
  in.ys = spec.rows();
  in.pam = ps.pam;

  // Confidence for every anchor, offsets only where they enter a loss.
  std::vector<double> logits(static_cast<std::size_t>(n));
  in.conf.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const double* d = desc(a);
    double z = params.bias[0];
    for (int k = 0; k < dim; ++k) z += d[k] * params.weight[static_cast<std::size_t>(k) * outs];
    logits[static_cast<std::size_t>(a)] = z;
    in.conf[static_cast<std::size_t>(a)] = sigmoid(z);
  }
  in.gconf = ps.targets.gconf;
  in.conf_weights = ps.conf_weights;
  // Offsets only where they enter a loss: row q of the offset matrices is
  // positive anchor ps.positives[q].
  const int npos = static_cast<int>(ps.positives.size());
  in.offset_index = ps.positives;
  in.dx = ProposalMatrix(npos, rows);
  for (int q = 0; q < npos; ++q) {
    const double* d = desc(ps.positives[static_cast<std::size_t>(q)]);
    for (int r = 0; r < rows; ++r) in.dx(q, r) = params.bias[static_cast<std::size_t>(1 + r)];
    for (int k = 0; k < dim; ++k) {
      const double dk = d[k];
      const double* w = params.weight.data() + static_cast<std::size_t>(k) * outs + 1;
      for (int r = 0; r < rows; ++r) in.dx(q, r) += dk * w[r];
    }
  }
  in.gdx = ps.gdx;
  in.anchor_xs = ps.anchor_xs;
  in.valid = ps.valid;

  const std::size_t vp_off = aux_offsets_[2 * s];
  const std::size_t seg_off = aux_offsets_[2 * s + 1];
  in.vp_target = ps.vp_target;
  in.vp_pred = Grid<double>(ps.vp_target.rows, ps.vp_target.cols, 0.0);
  for (std::size_t k = 0; k < in.vp_pred.data.size(); ++k) in.vp_pred.data[k] = sigmoid(aux_[vp_off + k]);
  in.seg_target = ps.seg_target;
  in.seg_pred = Grid<double>(ps.seg_target.rows, ps.seg_target.cols, 0.0);
  for (std::size_t k = 0; k < in.seg_pred.data.size(); ++k) in.seg_pred.data[k] = sigmoid(aux_[seg_off + k]);

  // Predicted positives in the bird's-eye view.
  std::vector<BevLineFit> fits;
  std::vector<std::vector<ProjectionJacobian>> jacobians;
  std::vector<std::vector<int>> fit_rows;
  for (int q = 0; q < npos; ++q) {
    std::vector<Point2> bev;
    std::vector<ProjectionJacobian> jac;
    std::vector<int> used;
    const RowMask& mask = ps.valid[static_cast<std::size_t>(q)];
    for (int r = 0; r < rows; ++r) {
      if (!mask[static_cast<std::size_t>(r)]) continue;
      const Point2 p{ps.anchor_xs(q, r) + in.dx(q, r), in.ys[static_cast<std::size_t>(r)]};
      jac.push_back(project_with_jacobian(ps.ipm, p));
      // Overflowed offsets; the caller reports this as divergence.
      const Point2 v = jac.back().value;
      if (!std::isfinite(v.x * v.x + v.y * v.y)) return std::numeric_limits<double>::quiet_NaN();
      bev.push_back(jac.back().value);
      used.push_back(r);
    }
    fits.push_back(fit_bev_line_with_jacobian(bev));
    in.bev_lines.push_back(fits.back().line);
    jacobians.push_back(std::move(jac));
    fit_rows.push_back(std::move(used));
  }

  const LossValue loss = total_loss(in, config_.weights);
  if (record) {
    record->l_v += loss.components.at("L_V");
    record->l_c += loss.components.at("L_C");
    record->l_r += loss.components.at("L_R");
    record->l_p += loss.components.at("L_P");
    record->l_l += loss.components.at("L_L");
    record->l_i += loss.components.at("L_I");
  }
  if (!grad && !grad_aux) return loss.value;

  if (grad_aux) {
    const std::vector<double>& gv = loss.grad("vp_pred");
    for (std::size_t k = 0; k < gv.size(); ++k) {
      const double p = in.vp_pred.data[k];
      (*grad_aux)[vp_off + k] += gv[k] * p * (1.0 - p);
    }
    const std::vector<double>& gs = loss.grad("seg_pred");
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const double p = in.seg_pred.data[k];
      (*grad_aux)[seg_off + k] += gs[k] * p * (1.0 - p);
    }
  }
  if (!grad) return loss.value;

  const std::vector<double>& gconf = loss.grad("conf");
  for (int a = 0; a < n; ++a) {
    const double p = in.conf[static_cast<std::size_t>(a)];
    const double gz = gconf[static_cast<std::size_t>(a)] * p * (1.0 - p);
    if (gz == 0.0) continue;
    const double* d = desc(a);
    grad->bias[0] += gz;
    for (int k = 0; k < dim; ++k) grad->weight[static_cast<std::size_t>(k) * outs] += gz * d[k];
  }

  ProposalMatrix gdx(npos, rows);
  const std::vector<double>& gd = loss.grad("dx");
  std::copy(gd.begin(), gd.end(), gdx.data.begin());
  const std::vector<double>& gl = loss.grad("bev_lines");
  for (int q = 0; q < npos; ++q) {
    const std::size_t b = 3 * static_cast<std::size_t>(q);
    const double ga = gl[b], gb = gl[b + 1], gc = gl[b + 2];
    const BevLineFit& fit = fits[static_cast<std::size_t>(q)];
    const auto& jac = jacobians[static_cast<std::size_t>(q)];
    const auto& used = fit_rows[static_cast<std::size_t>(q)];
    for (std::size_t j = 0; j < used.size(); ++j) {
      // d(bev point) / d(image x); the image y of a row is fixed.
      const double gx_bev = ga * fit.grad_a[j].x + gb * fit.grad_b[j].x + gc * fit.grad_c[j].x;
      const double gy_bev = ga * fit.grad_a[j].y + gb * fit.grad_b[j].y + gc * fit.grad_c[j].y;
      gdx(q, used[j]) += gx_bev * jac[j].dx_dx + gy_bev * jac[j].dy_dx;
    }
  }
  for (int q = 0; q < npos; ++q) {
    const double* d = desc(ps.positives[static_cast<std::size_t>(q)]);
    for (int r = 0; r < rows; ++r) grad->bias[static_cast<std::size_t>(1 + r)] += gdx(q, r);
    for (int k = 0; k < dim; ++k) {
      const double dk = d[k];
      double* w = grad->weight.data() + static_cast<std::size_t>(k) * outs + 1;
      for (int r = 0; r < rows; ++r) w[r] += dk * gdx(q, r);
    }
  }
  return loss.value;
}

// ---------------------------------------------------------------------------

TrainResult train(std::span<const SyntheticScene> scenes, const TrainConfig& config) {
  TrainingProblem problem(scenes, config);
  TrainResult result;
  result.params = ScorerParams(problem.descriptor_dim(), problem.rows());
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, 1.0);
  for (double& w : result.params.weight) w = config.init_std * init(rng);

  const std::size_t np = result.params.size();
  std::vector<double> x = result.params.flatten();
  x.insert(x.end(), problem.aux().begin(), problem.aux().end());
  std::vector<double> m(x.size(), 0.0), v(x.size(), 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  double b1t = 1.0, b2t = 1.0;

  ScorerParams grad;
  std::vector<double> grad_aux;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochRecord rec;
    const double loss = problem.evaluate(result.params, &grad, &grad_aux, &rec);
    rec.epoch = epoch;
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergedTraining,
                  "training loss is not finite at epoch " + std::to_string(epoch));
    }
    result.log.epochs.push_back(rec);
    const std::size_t e = result.log.epochs.size() - 1;
    if (!result.log.flagged && epoch >= config.warmup + 10 &&
        rec.total > result.log.epochs[e - 10].total) {
      result.log.flagged = true;
      result.log.first_flagged_epoch = epoch;
    }

    std::vector<double> g = grad.flatten();
    g.insert(g.end(), grad_aux.begin(), grad_aux.end());
    b1t *= kBeta1;
    b2t *= kBeta2;
    if (config.optimizer == Optimizer::kGradientDescent) {
      for (std::size_t k = 0; k < x.size(); ++k) x[k] -= config.lr * g[k];
    } else {
      for (std::size_t k = 0; k < x.size(); ++k) {
        m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
        v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
        const double mh = m[k] / (1.0 - b1t);
        const double vh = v[k] / (1.0 - b2t);
        x[k] -= config.lr * mh / (std::sqrt(vh) + kAdamEps);
      }
    }
    result.params.assign(std::span<const double>(x.data(), np));
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(np), x.end(), problem.aux().begin());
    if (!result.params.finite()) {
      throw Error(ErrorCode::kDivergedTraining,
                  "scorer parameters are not finite at epoch " + std::to_string(epoch));
    }
  }
  return result;
}

double scorer_gradient_check(const TrainingProblem& problem, const ScorerParams& params,
                             int samples, std::uint64_t seed, double step) {
  ScorerParams grad;
  problem.evaluate(params, &grad, nullptr);
  const std::vector<double> analytic = grad.flatten();
  std::vector<double> x = params.flatten();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  ScorerParams probe = params;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    // Every fourth sample hits the confidence column or a bias.
    std::size_t k = pick(rng);
    if (i % 4 == 0) k = (k % static_cast<std::size_t>(params.descriptor_dim)) * params.outputs;
    if (i % 8 == 1) k = params.weight.size() + k % params.bias.size();
    const double saved = x[k];
    x[k] = saved + step;
    probe.assign(x);
    const double up = problem.evaluate(probe, nullptr, nullptr);
    x[k] = saved - step;
    probe.assign(x);
    const double down = problem.evaluate(probe, nullptr, nullptr);
    x[k] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(fd), std::abs(analytic[k]), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic[k]) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------

std::vector<ScoredProposal> predict_lanes(const PreparedScene& prepared, const ScorerParams& params,
                                          const ImageSpec& spec, const NmsParams& nms) {
  const int rows = spec.key_points;
  const int dim = prepared.descriptor_dim;
  const int outs = params.outputs;
  if (params.descriptor_dim != dim || outs != 1 + rows) {
    throw Error(ErrorCode::kShapeMismatch, "scorer shape does not match the descriptors");
  }
  const int start = first_visible_row(prepared.vp.y, spec);
  std::vector<ScoredProposal> proposals;
  for (std::size_t a = 0; a < prepared.anchors.size(); ++a) {
    const double* d = prepared.descriptors.data() + a * static_cast<std::size_t>(dim);
    double z = params.bias[0];
    for (int k = 0; k < dim; ++k) z += d[k] * params.weight[static_cast<std::size_t>(k) * outs];
    const double conf = sigmoid(z);
    if (conf < nms.conf_thresh) continue;

    ScoredProposal p;
    p.conf = conf;
    p.xs.assign(static_cast<std::size_t>(rows), 0.0);
    p.valid.assign(static_cast<std::size_t>(rows), 0);
    for (int r = 0; r < rows; ++r) p.xs[static_cast<std::size_t>(r)] = params.bias[static_cast<std::size_t>(1 + r)];
    for (int k = 0; k < dim; ++k) {
      const double* w = params.weight.data() + static_cast<std::size_t>(k) * outs + 1;
      for (int r = 0; r < rows; ++r) p.xs[static_cast<std::size_t>(r)] += d[k] * w[r];
    }
    const Anchor& anchor = prepared.anchors.anchors[a];
    for (int r = 0; r < rows; ++r) p.xs[static_cast<std::size_t>(r)] += anchor.sampled_xs[static_cast<std::size_t>(r)];
    // One contiguous run: the first in-image row at or below the margin and
    // every row after it until the lane leaves the image.
    bool started = false;
    for (int r = start; r < rows; ++r) {
      const double x = p.xs[static_cast<std::size_t>(r)];
      const bool inside = x >= 0.0 && x <= spec.width - 1.0;
      if (inside) {
        p.valid[static_cast<std::size_t>(r)] = 1;
        ++p.len;
        started = true;
      } else if (started) {
        break;
      }
    }
    if (p.len < 2) continue;
    proposals.push_back(std::move(p));
  }
  return line_nms(proposals, nms);
}

LanePolyline proposal_to_lane(const ScoredProposal& p) {
  LanePolyline lane;
  lane.xs = p.xs;
  lane.valid = p.valid;
  for (std::size_t i = 0; i < lane.xs.size(); ++i) {
    if (!lane.valid[i]) lane.xs[i] = 0.0;
  }
  return lane;
}

}  // namespace lanestruct
