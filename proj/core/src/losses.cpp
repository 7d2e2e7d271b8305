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

#include "lanestruct/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lanestruct/error.hpp"

namespace lanestruct {

namespace {

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double bce_term(double p, double t) {
  p = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
}

double bce_grad(double p, double t) {
  p = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return (p - t) / (p * (1.0 - p));
}

void check_masks(std::span<const RowMask> valid, std::span<const std::uint8_t> positive,
                 int proposals, int rows) {
  if (static_cast<int>(valid.size()) != proposals ||
      static_cast<int>(positive.size()) != proposals) {
    throw Error(ErrorCode::kShapeMismatch, "mask count does not match proposal count");
  }
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (positive[i] && static_cast<int>(valid[i].size()) != rows) {
      throw Error(ErrorCode::kShapeMismatch, "row mask length does not match P");
    }
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {vp, confidence, regression, pixel, lane, image}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "loss weights must be finite and non-negative");
    }
  }
}

LossValue bce_mask_loss(const Grid<double>& pred, const Grid<double>& target) {
  if (!pred.same_shape(target)) {
    throw Error(ErrorCode::kShapeMismatch, "prediction and target grids differ in shape");
  }
  LossValue out;
  std::vector<double>& g = out.gradients["pred"];
  g.assign(pred.size(), 0.0);
  if (pred.size() == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    out.value += bce_term(pred.data[k], target.data[k]);
    g[k] = bce_grad(pred.data[k], target.data[k]) * inv_n;
  }
  out.value *= inv_n;
  return out;
}

LossValue confidence_loss(std::span<const double> conf, std::span<const std::uint8_t> gconf,
                          std::span<const double> weights) {
  if (conf.size() != gconf.size() || (!weights.empty() && weights.size() != conf.size())) {
    throw Error(ErrorCode::kShapeMismatch, "confidence inputs differ in length");
  }
  LossValue out;
  std::vector<double>& g = out.gradients["conf"];
  g.assign(conf.size(), 0.0);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    const double t = gconf[i] ? 1.0 : 0.0;
    out.value += w * bce_term(conf[i], t);
    g[i] = w * bce_grad(conf[i], t);
  }
  return out;
}

double smooth_l1(double d) {
  const double ad = std::abs(d);
  return ad < 1.0 ? 0.5 * d * d : ad - 0.5;
}

double smooth_l1_grad(double d) { return std::abs(d) < 1.0 ? d : sign(d); }

LossValue regression_loss(const ProposalMatrix& dx, const ProposalMatrix& gdx,
                          std::span<const RowMask> valid, std::span<const std::uint8_t> positive) {
  if (!dx.same_shape(gdx)) throw Error(ErrorCode::kShapeMismatch, "dx and gdx differ in shape");
  check_masks(valid, positive, dx.proposals, dx.rows);
  LossValue out;
  std::vector<double>& g = out.gradients["dx"];
  g.assign(dx.data.size(), 0.0);
  for (int i = 0; i < dx.proposals; ++i) {
    if (!positive[static_cast<std::size_t>(i)]) continue;
    const RowMask& mask = valid[static_cast<std::size_t>(i)];
    for (int r = 0; r < dx.rows; ++r) {
      if (!mask[static_cast<std::size_t>(r)]) continue;
      const double d = dx(i, r) - gdx(i, r);
      out.value += smooth_l1(d);
      g[static_cast<std::size_t>(i) * dx.rows + r] = smooth_l1_grad(d);
    }
  }
  return out;
}

LossValue parallelism_loss(std::span<const BevLine> lines) {
  LossValue out;
  std::vector<double>& g = out.gradients["lines"];
  g.assign(3 * lines.size(), 0.0);
  if (lines.size() < 2) {
    out.too_few_lanes = true;
    return out;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = 0; j < lines.size(); ++j) {
      if (i == j) continue;
      const double r = lines[i].a * lines[j].b - lines[j].a * lines[i].b;
      out.value += std::abs(r);
      const double s = sign(r);
      g[3 * i] += s * lines[j].b;
      g[3 * j + 1] += s * lines[i].a;
      g[3 * j] -= s * lines[i].b;
      g[3 * i + 1] -= s * lines[j].a;
    }
  }
  return out;
}

LossValue attention_regression_loss(const ProposalMatrix& xs_pred, const ProposalMatrix& xs_gt,
                                    std::span<const RowMask> valid,
                                    std::span<const std::uint8_t> positive,
                                    std::span<const double> ys, const AttentionMap& pam) {
  if (!xs_pred.same_shape(xs_gt) || static_cast<int>(ys.size()) != xs_pred.rows) {
    throw Error(ErrorCode::kShapeMismatch, "attention regression inputs differ in shape");
  }
  check_masks(valid, positive, xs_pred.proposals, xs_pred.rows);
  LossValue out;
  std::vector<double>& g = out.gradients["xs_pred"];
  g.assign(xs_pred.data.size(), 0.0);
  for (int i = 0; i < xs_pred.proposals; ++i) {
    if (!positive[static_cast<std::size_t>(i)]) continue;
    const RowMask& mask = valid[static_cast<std::size_t>(i)];
    for (int r = 0; r < xs_pred.rows; ++r) {
      if (!mask[static_cast<std::size_t>(r)]) continue;
      const double weight = 1.0 + std::abs(sample_attention(pam, xs_gt(i, r), ys[static_cast<std::size_t>(r)]));
      const double d = xs_pred(i, r) - xs_gt(i, r);
      out.value += std::abs(d) * weight;
      g[static_cast<std::size_t>(i) * xs_pred.rows + r] = sign(d) * weight;
    }
  }
  return out;
}

LossValue total_loss(const LossInputs& in, const LossWeights& weights) {
  weights.validate();
  LossValue out;
  auto accumulate = [&](const char* component, const char* grad_name, double w,
                        const LossValue& term, const std::string& term_grad) {
    out.components[component] = term.value;
    out.value += w * term.value;
    std::vector<double>& g = out.gradients[grad_name];
    const std::vector<double>& tg = term.gradients.at(term_grad);
    if (g.empty()) g.assign(tg.size(), 0.0);
    for (std::size_t k = 0; k < tg.size(); ++k) g[k] += w * tg[k];
  };

  accumulate("L_V", "vp_pred", weights.vp, bce_mask_loss(in.vp_pred, in.vp_target), "pred");
  accumulate("L_C", "conf", weights.confidence,
             confidence_loss(in.conf, in.gconf, in.conf_weights), "conf");
  std::vector<std::uint8_t> positive = in.gconf;
  if (!in.offset_index.empty()) {
    positive.clear();
    for (int k : in.offset_index) {
      if (k < 0 || static_cast<std::size_t>(k) >= in.gconf.size()) {
        throw Error(ErrorCode::kShapeMismatch, "offset index out of range");
      }
      positive.push_back(in.gconf[static_cast<std::size_t>(k)]);
    }
  }
  accumulate("L_R", "dx", weights.regression, regression_loss(in.dx, in.gdx, in.valid, positive),
             "dx");
  accumulate("L_P", "seg_pred", weights.pixel, bce_mask_loss(in.seg_pred, in.seg_target), "pred");

  const LossValue lane = parallelism_loss(in.bev_lines);
  out.too_few_lanes = lane.too_few_lanes;
  accumulate("L_L", "bev_lines", weights.lane, lane, "lines");

  if (!in.anchor_xs.same_shape(in.dx)) {
    throw Error(ErrorCode::kShapeMismatch, "anchor_xs and dx differ in shape");
  }
  ProposalMatrix xs_pred = in.anchor_xs;
  ProposalMatrix xs_gt = in.anchor_xs;
  for (std::size_t k = 0; k < xs_pred.data.size(); ++k) {
    xs_pred.data[k] += in.dx.data[k];
    xs_gt.data[k] += in.gdx.data[k];
  }
  accumulate("L_I", "dx", weights.image,
             attention_regression_loss(xs_pred, xs_gt, in.valid, positive, in.ys, in.pam),
             "xs_pred");
  return out;
}

FdComparison compare_with_finite_differences(const std::function<double(std::span<const double>)>& f,
                                             std::span<const double> x,
                                             std::span<const double> analytic, double step,
                                             double floor) {
  if (x.size() != analytic.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient length does not match input length");
  }
  FdComparison cmp;
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + step;
    const double up = f(probe);
    probe[k] = saved - step;
    const double down = f(probe);
    probe[k] = saved;
    cmp.evaluations += 2;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[k]), std::abs(fd), floor});
    cmp.max_rel_error = std::max(cmp.max_rel_error, std::abs(analytic[k] - fd) / denom);
  }
  return cmp;
}

}  // namespace lanestruct
