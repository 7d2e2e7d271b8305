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

#include <span>
#include <string>
#include <vector>

#include "lanestruct/lane_repr.hpp"

namespace lanestruct {

// Lane IoU of two thick polylines rasterized at full resolution on an
// H x W image. Throws kEmptyRaster if either lane covers no pixel.
double lane_iou(std::span<const Point2> pred, std::span<const Point2> gt, int height, int width,
                double width_px = 30.0);
double lane_iou(const LanePolyline& pred, const LanePolyline& gt, const ImageSpec& spec,
                double width_px = 30.0);

// Maximum-weight assignment on a rows x cols weight matrix (row-major);
// returns for every row the assigned column or -1. Rectangular inputs are
// padded internally with zero-weight entries.
std::vector<int> max_weight_assignment(std::span<const double> weights, int rows, int cols);

// Among assignments using only pairs with score >= thresh, one with the most
// pairs and, among those, the largest total score.
std::vector<int> maximum_threshold_matching(std::span<const double> scores, int rows, int cols,
                                            double thresh);

struct EvalImage {
  std::string name;
  std::string category;
  std::vector<LanePolyline> preds;
  std::vector<LanePolyline> gts;
  std::vector<double> ys;  // row grid shared by preds and gts
};

struct LaneMatch {
  int pred = -1;
  int gt = -1;
  double iou = 0.0;
};

struct ImageResult {
  std::string name;
  std::string category;
  int tp = 0, fp = 0, fn = 0;
  std::vector<LaneMatch> matches;
  std::vector<double> iou;  // preds x gts, row-major
  int pred_count = 0;
  int gt_count = 0;
};

struct EvalReport {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ImageResult> per_image;
};

// precision, recall and F1 from counts with 0/0 taken as 0.
void finalize_scores(EvalReport& report);

ImageResult score_image(const EvalImage& image, int height, int width, double iou_thresh = 0.5,
                        double width_px = 30.0);

// CULane-style F1: per image a maximum matching of IoU >= iou_thresh pairs,
// then TP/FP/FN summed over images.
EvalReport match_and_score(std::span<const EvalImage> images, int height, int width,
                           double iou_thresh = 0.5, double width_px = 30.0);

struct TusimpleImageResult {
  std::string name;
  long hits = 0;
  long gt_points = 0;
  std::vector<LaneMatch> matches;  // iou field holds the hit count
};

struct TusimpleReport {
  double accuracy = 0.0;
  long hits = 0;
  long gt_points = 0;
  std::vector<TusimpleImageResult> per_image;
};

// Fraction of ground-truth points whose matched prediction lies within
// x_thresh_px on the same row. Lanes are matched per image by the maximum
// matching rule on hit counts; unmatched GT lanes count every point as a
// miss. Throws kRowGridMismatch when lanes disagree with the row grid.
TusimpleReport tusimple_accuracy(std::span<const EvalImage> images, double x_thresh_px = 20.0);

}  // namespace lanestruct
