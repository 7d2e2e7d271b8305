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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lanestruct/anchoring.hpp"
#include "lanestruct/evalkit.hpp"
#include "lanestruct/lane_repr.hpp"
#include "lanestruct/losses.hpp"
#include "lanestruct/trainer.hpp"

namespace {

using namespace lanestruct;

const ImageSpec kSpec;

SyntheticScene scene(std::uint64_t seed, int lanes = 4, double noise = 1.0) {
  return generate_scene(seed, kSpec, lanes, noise);
}

void BM_MinCircumscribedRect(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(100, 540), uy(0, 360);
  std::vector<Point2> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {ux(rng), uy(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(min_circumscribed_rect(pts));
}
BENCHMARK(BM_MinCircumscribedRect)->Arg(8)->Arg(72)->Arg(512);

void BM_EncodeDecode(benchmark::State& state) {
  const LanePolyline lane = scene(2).lanes[1];
  for (auto _ : state) benchmark::DoNotOptimize(decode(encode(lane, kSpec), kSpec));
}
BENCHMARK(BM_EncodeDecode);

void BM_GenerateAnchors(benchmark::State& state) {
  const VanishingPoint vp{320, 100, 1};
  for (auto _ : state) benchmark::DoNotOptimize(generate_anchors(vp, AnchorParams{}, kSpec));
}
BENCHMARK(BM_GenerateAnchors);

void BM_AssignTargets(benchmark::State& state) {
  const SyntheticScene s = scene(3);
  const AnchorSet set = generate_anchors(s.vp_true, AnchorParams{}, kSpec);
  for (auto _ : state) benchmark::DoNotOptimize(assign_targets(set, s.lanes));
}
BENCHMARK(BM_AssignTargets);

void BM_LineNms(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> conf(0, 1), x0(50, 590), jitter(-4, 4);
  std::vector<ScoredProposal> props(static_cast<std::size_t>(state.range(0)));
  for (auto& p : props) {
    p.conf = conf(rng);
    p.xs.resize(72);
    p.valid.assign(72, 1);
    p.len = 72;
    const double base = x0(rng);
    for (int i = 0; i < 72; ++i) p.xs[i] = base + 0.5 * i + jitter(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(line_nms(props));
}
BENCHMARK(BM_LineNms)->Arg(100)->Arg(1000)->Arg(2835);

void BM_LaneIou(benchmark::State& state) {
  const SyntheticScene s = scene(5);
  for (auto _ : state) benchmark::DoNotOptimize(lane_iou(s.lanes[0], s.lanes[1], kSpec));
}
BENCHMARK(BM_LaneIou);

void BM_MatchAndScore(benchmark::State& state) {
  std::vector<EvalImage> images;
  for (std::uint64_t k = 0; k < 10; ++k) {
    EvalImage im;
    im.ys = kSpec.rows();
    im.gts = scene(10 + k, 4, 0.0).lanes;
    im.preds = scene(10 + k, 4, 3.0).lanes;
    images.push_back(std::move(im));
  }
  for (auto _ : state) benchmark::DoNotOptimize(match_and_score(images, kSpec.height, kSpec.width));
}
BENCHMARK(BM_MatchAndScore);

void BM_OptimizeHomography(benchmark::State& state) {
  const SyntheticScene s = scene(6, 4, 0.0);
  std::vector<std::vector<Point2>> lanes;
  for (const auto& l : s.lanes) lanes.push_back(l.points(kSpec.rows()));
  const Homography init = initial_ipm_guess(lanes);
  for (auto _ : state) benchmark::DoNotOptimize(optimize_homography(lanes, init));
}
BENCHMARK(BM_OptimizeHomography);

void BM_TrainingObjective(benchmark::State& state) {
  const std::vector<SyntheticScene> scenes{scene(7), scene(8)};
  const TrainConfig config;
  const TrainingProblem problem(scenes, config);
  ScorerParams params(problem.descriptor_dim(), problem.rows());
  ScorerParams grad;
  std::vector<double> grad_aux;
  for (auto _ : state) benchmark::DoNotOptimize(problem.evaluate(params, &grad, &grad_aux));
}
BENCHMARK(BM_TrainingObjective);

}  // namespace

BENCHMARK_MAIN();
