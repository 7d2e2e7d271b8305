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

#include <cmath>
#include <random>

#include "lanestruct/losses.hpp"

namespace lanestruct {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Residual in [lo, hi] with a random sign.
double signed_away_from(Rng& rng, double lo, double hi) {
  const double m = uniform(rng, lo, hi);
  return uniform(rng, 0.0, 1.0) < 0.5 ? -m : m;
}

// Smooth-L1 residual at least 0.05 away from the |d| = 1 kink and from 0.
double smooth_l1_residual(Rng& rng) {
  return uniform(rng, 0.0, 1.0) < 0.5 ? signed_away_from(rng, 0.05, 0.95)
                                      : signed_away_from(rng, 1.05, 4.0);
}

Grid<double> random_probabilities(Rng& rng, int rows, int cols) {
  Grid<double> g(rows, cols);
  for (double& v : g.data) v = uniform(rng, 0.05, 0.95);
  return g;
}

Grid<double> random_binary(Rng& rng, int rows, int cols) {
  Grid<double> g(rows, cols);
  for (double& v : g.data) v = uniform(rng, 0.0, 1.0) < 0.3 ? 1.0 : 0.0;
  return g;
}

// Random instance of every term, sized small enough for exhaustive FD.
LossInputs random_inputs(Rng& rng) {
  LossInputs in;
  const int proposals = 6;
  const int rows = 10;
  const ImageSpec spec{90, 160, rows};
  in.ys = spec.rows();

  in.vp_pred = random_probabilities(rng, 4, 5);
  in.vp_target = random_binary(rng, 4, 5);
  in.seg_pred = random_probabilities(rng, 5, 6);
  in.seg_target = random_binary(rng, 5, 6);

  in.conf.resize(proposals);
  in.gconf.resize(proposals);
  for (int i = 0; i < proposals; ++i) {
    in.conf[static_cast<std::size_t>(i)] = uniform(rng, 0.05, 0.95);
    in.gconf[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 1 : 0;
  }

  in.dx = ProposalMatrix(proposals, rows);
  in.gdx = ProposalMatrix(proposals, rows);
  in.anchor_xs = ProposalMatrix(proposals, rows);
  in.valid.assign(proposals, RowMask(rows, 0));
  for (int i = 0; i < proposals; ++i) {
    const int first = static_cast<int>(uniform(rng, 0, 3));
    const int last = rows - 1 - static_cast<int>(uniform(rng, 0, 3));
    for (int r = 0; r < rows; ++r) {
      in.anchor_xs(i, r) = uniform(rng, 10.0, 150.0);
      in.gdx(i, r) = uniform(rng, -5.0, 5.0);
      in.dx(i, r) = in.gdx(i, r) + smooth_l1_residual(rng);
      if (r >= first && r <= last) in.valid[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)] = 1;
    }
  }

  for (int l = 0; l < 5; ++l) {
    const double angle = uniform(rng, 0.2, 2.9);
    in.bev_lines.push_back({std::sin(angle), -std::cos(angle), uniform(rng, -50.0, 50.0)});
  }

  const VanishingPoint vp{uniform(rng, 40.0, 120.0), uniform(rng, 20.0, 50.0), 1};
  in.pam = attention_map(vp, spec, 2, 40.0, 22.5);
  return in;
}

// Continuous inputs of the total objective flattened in a fixed order.
std::vector<double> flatten(const LossInputs& in) {
  std::vector<double> x;
  x.insert(x.end(), in.vp_pred.data.begin(), in.vp_pred.data.end());
  x.insert(x.end(), in.conf.begin(), in.conf.end());
  x.insert(x.end(), in.dx.data.begin(), in.dx.data.end());
  x.insert(x.end(), in.seg_pred.data.begin(), in.seg_pred.data.end());
  for (const BevLine& l : in.bev_lines) x.insert(x.end(), {l.a, l.b, l.c});
  return x;
}

void unflatten(std::span<const double> x, LossInputs& in) {
  std::size_t k = 0;
  for (double& v : in.vp_pred.data) v = x[k++];
  for (double& v : in.conf) v = x[k++];
  for (double& v : in.dx.data) v = x[k++];
  for (double& v : in.seg_pred.data) v = x[k++];
  for (BevLine& l : in.bev_lines) {
    l.a = x[k++];
    l.b = x[k++];
    l.c = x[k++];
  }
}

std::vector<double> concat_gradients(const LossValue& v) {
  std::vector<double> g;
  for (const char* name : {"vp_pred", "conf", "dx", "seg_pred", "bev_lines"}) {
    const auto& part = v.grad(name);
    g.insert(g.end(), part.begin(), part.end());
  }
  return g;
}

// Straight image lanes through a common point, each slightly rotated so no
// pair is exactly parallel after projection.
std::vector<std::vector<Point2>> random_lane_points(Rng& rng) {
  const Point2 vp{uniform(rng, 250.0, 390.0), uniform(rng, 100.0, 140.0)};
  std::vector<std::vector<Point2>> lanes;
  for (int l = 0; l < 3; ++l) {
    const double bottom_x = 80.0 + 240.0 * l + uniform(rng, -30.0, 30.0);
    const Point2 top{vp.x + uniform(rng, -15.0, 15.0), vp.y + 20.0};
    std::vector<Point2> pts;
    for (int k = 0; k < 8; ++k) {
      const double t = k / 7.0;
      pts.push_back({top.x + t * (bottom_x - top.x) + uniform(rng, -1.0, 1.0),
                     top.y + t * (359.0 - top.y)});
    }
    lanes.push_back(std::move(pts));
  }
  return lanes;
}

struct Accumulator {
  GradCheckResult result;
  void add(const FdComparison& c) {
    result.max_rel_error = std::max(result.max_rel_error, c.max_rel_error);
    result.evaluations += c.evaluations;
    ++result.points;
  }
};

}  // namespace

std::vector<GradCheckResult> run_gradient_checks(int points, std::uint64_t seed,
                                                 double tolerance) {
  Rng rng(seed);
  Accumulator vp{{"L_V"}}, conf{{"L_C"}}, reg{{"L_R"}}, pix{{"L_P"}}, lane{{"L_L"}},
      image{{"L_I"}}, total{{"total"}}, homography{{"homography_parallelism"}};

  for (int n = 0; n < points; ++n) {
    const LossInputs in = random_inputs(rng);

    vp.add(compare_with_finite_differences(
        [&](std::span<const double> x) {
          Grid<double> p = in.vp_pred;
          p.data.assign(x.begin(), x.end());
          return bce_mask_loss(p, in.vp_target).value;
        },
        in.vp_pred.data, bce_mask_loss(in.vp_pred, in.vp_target).grad("pred")));

    pix.add(compare_with_finite_differences(
        [&](std::span<const double> x) {
          Grid<double> p = in.seg_pred;
          p.data.assign(x.begin(), x.end());
          return bce_mask_loss(p, in.seg_target).value;
        },
        in.seg_pred.data, bce_mask_loss(in.seg_pred, in.seg_target).grad("pred")));

    conf.add(compare_with_finite_differences(
        [&](std::span<const double> x) { return confidence_loss(x, in.gconf).value; }, in.conf,
        confidence_loss(in.conf, in.gconf).grad("conf")));

    reg.add(compare_with_finite_differences(
        [&](std::span<const double> x) {
          ProposalMatrix dx = in.dx;
          dx.data.assign(x.begin(), x.end());
          return regression_loss(dx, in.gdx, in.valid, in.gconf).value;
        },
        in.dx.data, regression_loss(in.dx, in.gdx, in.valid, in.gconf).grad("dx")));

    {
      std::vector<double> flat;
      for (const BevLine& l : in.bev_lines) flat.insert(flat.end(), {l.a, l.b, l.c});
      auto as_lines = [](std::span<const double> x) {
        std::vector<BevLine> lines;
        for (std::size_t k = 0; k + 2 < x.size(); k += 3) lines.push_back({x[k], x[k + 1], x[k + 2]});
        return lines;
      };
      lane.add(compare_with_finite_differences(
          [&](std::span<const double> x) { return parallelism_loss(as_lines(x)).value; }, flat,
          parallelism_loss(in.bev_lines).grad("lines")));
    }

    {
      ProposalMatrix xs_pred = in.anchor_xs;
      ProposalMatrix xs_gt = in.anchor_xs;
      for (std::size_t k = 0; k < xs_pred.data.size(); ++k) {
        xs_pred.data[k] += in.dx.data[k];
        xs_gt.data[k] += in.gdx.data[k];
      }
      image.add(compare_with_finite_differences(
          [&](std::span<const double> x) {
            ProposalMatrix p = xs_pred;
            p.data.assign(x.begin(), x.end());
            return attention_regression_loss(p, xs_gt, in.valid, in.gconf, in.ys, in.pam).value;
          },
          xs_pred.data,
          attention_regression_loss(xs_pred, xs_gt, in.valid, in.gconf, in.ys, in.pam)
              .grad("xs_pred")));
    }

    {
      const LossWeights weights{uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0),
                                uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0),
                                uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 2.0)};
      total.add(compare_with_finite_differences(
          [&](std::span<const double> x) {
            LossInputs probe = in;
            unflatten(x, probe);
            return total_loss(probe, weights).value;
          },
          flatten(in), concat_gradients(total_loss(in, weights))));
    }

    {
      const auto lanes = random_lane_points(rng);
      Homography h = initial_ipm_guess(lanes);
      h.h[0] = uniform(rng, 0.8, 1.2);
      h.h[1] = uniform(rng, -0.1, 0.1);
      h.h[3] = uniform(rng, 0.8, 1.2);
      std::array<double, 6> g{};
      homography_parallelism(h, lanes, &g);
      // Relative step per parameter: entries differ by orders of magnitude.
      std::array<double, 6> scale{};
      for (std::size_t m = 0; m < 6; ++m) scale[m] = std::max(std::abs(h.h[m]), 1e-3);
      std::vector<double> x(6), analytic(6);
      for (std::size_t m = 0; m < 6; ++m) {
        x[m] = h.h[m] / scale[m];
        analytic[m] = g[m] * scale[m];
      }
      homography.add(compare_with_finite_differences(
          [&](std::span<const double> u) {
            Homography probe;
            for (std::size_t m = 0; m < 6; ++m) probe.h[m] = u[m] * scale[m];
            return homography_parallelism(probe, lanes);
          },
          x, analytic));
    }
  }

  std::vector<GradCheckResult> results;
  for (Accumulator* acc : {&vp, &conf, &reg, &pix, &lane, &image, &total, &homography}) {
    acc->result.passed = acc->result.max_rel_error < tolerance;
    results.push_back(acc->result);
  }
  return results;
}

}  // namespace lanestruct
