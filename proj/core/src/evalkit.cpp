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

#include "lanestruct/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lanestruct/error.hpp"
#include "lanestruct/structures.hpp"

namespace lanestruct {

namespace {

std::vector<std::uint32_t> lane_cells(std::span<const Point2> pts, int height, int width,
                                      double width_px) {
  std::vector<std::uint32_t> cells = polyline_cells(pts, height, width, 1, width_px);
  if (cells.empty()) throw Error(ErrorCode::kEmptyRaster, "lane covers no pixel of the image");
  return cells;
}

double cells_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void check_grid(const LanePolyline& lane, std::size_t rows) {
  if (lane.xs.size() != rows || lane.valid.size() != rows) {
    throw Error(ErrorCode::kRowGridMismatch,
                "lane has " + std::to_string(lane.xs.size()) + " rows, grid has " +
                    std::to_string(rows));
  }
}

}  // namespace

double lane_iou(std::span<const Point2> pred, std::span<const Point2> gt, int height, int width,
                double width_px) {
  return cells_iou(lane_cells(pred, height, width, width_px),
                   lane_cells(gt, height, width, width_px));
}

double lane_iou(const LanePolyline& pred, const LanePolyline& gt, const ImageSpec& spec,
                double width_px) {
  const std::vector<double> ys = spec.rows();
  return lane_iou(pred.points(ys), gt.points(ys), spec.height, spec.width, width_px);
}

std::vector<int> max_weight_assignment(std::span<const double> weights, int rows, int cols) {
  std::vector<int> result(static_cast<std::size_t>(rows), -1);
  const int n = std::max(rows, cols);
  if (n == 0) return result;
  double max_w = 0.0;
  for (double w : weights) max_w = std::max(max_w, w);
  // Hungarian algorithm (potentials form) minimizing max_w - weight on the
  // zero-padded square matrix; 1-based indices, column 0 is a sentinel.
  auto cost = [&](int i, int j) {
    const double w = (i <= rows && j <= cols)
                         ? weights[static_cast<std::size_t>(i - 1) * cols + (j - 1)]
                         : 0.0;
    return max_w - w;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] <= rows && j <= cols) result[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return result;
}

std::vector<int> maximum_threshold_matching(std::span<const double> scores, int rows, int cols,
                                            double thresh) {
  // Every admissible pair outweighs any sum of scores, so cardinality is
  // maximized first and total score second.
  double score_sum = 0.0;
  for (double s : scores) score_sum += std::abs(s);
  const double big = score_sum + 1.0;
  std::vector<double> w(scores.size(), 0.0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (scores[k] >= thresh) w[k] = big + scores[k];
  }
  std::vector<int> match = max_weight_assignment(w, rows, cols);
  for (int i = 0; i < rows; ++i) {
    const int j = match[static_cast<std::size_t>(i)];
    if (j >= 0 && !(scores[static_cast<std::size_t>(i) * cols + j] >= thresh)) {
      match[static_cast<std::size_t>(i)] = -1;
    }
  }
  return match;
}

void finalize_scores(EvalReport& report) {
  const double tp = static_cast<double>(report.tp);
  report.precision = report.tp + report.fp > 0 ? tp / static_cast<double>(report.tp + report.fp) : 0.0;
  report.recall = report.tp + report.fn > 0 ? tp / static_cast<double>(report.tp + report.fn) : 0.0;
  const double pr = report.precision + report.recall;
  report.f1 = pr > 0 ? 2.0 * report.precision * report.recall / pr : 0.0;
}

ImageResult score_image(const EvalImage& image, int height, int width, double iou_thresh,
                        double width_px) {
  ImageResult res;
  res.name = image.name;
  res.category = image.category;
  const int np = static_cast<int>(image.preds.size());
  const int ng = static_cast<int>(image.gts.size());
  res.pred_count = np;
  res.gt_count = ng;

  std::vector<std::vector<std::uint32_t>> pred_cells, gt_cells;
  for (const LanePolyline& l : image.preds) {
    check_grid(l, image.ys.size());
    pred_cells.push_back(polyline_cells(l.points(image.ys), height, width, 1, width_px));
  }
  for (const LanePolyline& l : image.gts) {
    check_grid(l, image.ys.size());
    gt_cells.push_back(polyline_cells(l.points(image.ys), height, width, 1, width_px));
  }
  // Lanes entirely outside the image rasterize to nothing and match nothing.
  res.iou.assign(static_cast<std::size_t>(np) * ng, 0.0);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < ng; ++j)
      res.iou[static_cast<std::size_t>(i) * ng + j] =
          cells_iou(pred_cells[static_cast<std::size_t>(i)], gt_cells[static_cast<std::size_t>(j)]);

  const std::vector<int> match = maximum_threshold_matching(res.iou, np, ng, iou_thresh);
  for (int i = 0; i < np; ++i) {
    const int j = match[static_cast<std::size_t>(i)];
    if (j >= 0) res.matches.push_back({i, j, res.iou[static_cast<std::size_t>(i) * ng + j]});
  }
  res.tp = static_cast<int>(res.matches.size());
  res.fp = np - res.tp;
  res.fn = ng - res.tp;
  return res;
}

EvalReport match_and_score(std::span<const EvalImage> images, int height, int width,
                           double iou_thresh, double width_px) {
  EvalReport report;
  for (const EvalImage& image : images) {
    ImageResult res = score_image(image, height, width, iou_thresh, width_px);
    report.tp += res.tp;
    report.fp += res.fp;
    report.fn += res.fn;
    report.per_image.push_back(std::move(res));
  }
  finalize_scores(report);
  return report;
}

TusimpleReport tusimple_accuracy(std::span<const EvalImage> images, double x_thresh_px) {
  TusimpleReport report;
  for (const EvalImage& image : images) {
    const std::size_t rows = image.ys.size();
    for (const LanePolyline& l : image.preds) check_grid(l, rows);
    for (const LanePolyline& l : image.gts) check_grid(l, rows);

    const int np = static_cast<int>(image.preds.size());
    const int ng = static_cast<int>(image.gts.size());
    std::vector<double> hits(static_cast<std::size_t>(np) * ng, 0.0);
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < ng; ++j) {
        const LanePolyline& p = image.preds[static_cast<std::size_t>(i)];
        const LanePolyline& g = image.gts[static_cast<std::size_t>(j)];
        int count = 0;
        for (std::size_t r = 0; r < rows; ++r) {
          if (g.valid[r] && p.valid[r] && std::abs(p.xs[r] - g.xs[r]) <= x_thresh_px) ++count;
        }
        hits[static_cast<std::size_t>(i) * ng + j] = count;
      }
    }

    TusimpleImageResult res;
    res.name = image.name;
    for (const LanePolyline& g : image.gts) res.gt_points += g.valid_count();
    const std::vector<int> match = maximum_threshold_matching(hits, np, ng, 1.0);
    for (int i = 0; i < np; ++i) {
      const int j = match[static_cast<std::size_t>(i)];
      if (j < 0) continue;
      const double h = hits[static_cast<std::size_t>(i) * ng + j];
      res.hits += static_cast<long>(h);
      res.matches.push_back({i, j, h});
    }
    report.hits += res.hits;
    report.gt_points += res.gt_points;
    report.per_image.push_back(std::move(res));
  }
  report.accuracy = report.gt_points > 0
                        ? static_cast<double>(report.hits) / static_cast<double>(report.gt_points)
                        : 0.0;
  return report;
}

}  // namespace lanestruct
