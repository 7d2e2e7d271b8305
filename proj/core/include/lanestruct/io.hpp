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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lanestruct/anchoring.hpp"
#include "lanestruct/evalkit.hpp"
#include "lanestruct/lane_repr.hpp"
#include "lanestruct/losses.hpp"
#include "lanestruct/trainer.hpp"

namespace lanestruct {

// ---------------------------------------------------------------------------
// Annotation formats
// ---------------------------------------------------------------------------

struct CulaneParse {
  std::vector<LanePolyline> lanes;
  std::vector<int> point_counts;  // raw points kept per lane
  std::vector<std::string> warnings;
};

// One lane per line as alternating "x y" floats. Points with x < 0 are
// absent markers and are dropped; the remaining points are sorted by y and
// interpolated linearly onto every key-point row inside their y span. Lanes
// left with fewer than two points or two rows are skipped with a warning.
// Throws kParseError naming the line.
CulaneParse parse_culane(const std::string& text, const ImageSpec& spec);

// Lanes on the key-point rows written back as "x y" pairs, one lane per line.
std::string serialize_culane(std::span<const LanePolyline> lanes, const ImageSpec& spec);

struct TusimpleRecord {
  std::vector<LanePolyline> lanes;  // on the h_samples rows; -2 marks invalid rows
  std::vector<double> h_samples;
  std::string raw_file;
  // Any other fields, in order, as compact JSON text.
  std::vector<std::pair<std::string, std::string>> extra;
};

// One JSON record {"lanes": [[x...]], "h_samples": [y...], "raw_file": ...}.
// Throws kParseError.
TusimpleRecord parse_tusimple(const std::string& json_line);
std::string serialize_tusimple(const TusimpleRecord& record);

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

std::string codes_to_json(std::span<const BoxLineCode> codes);
std::string vp_to_json(const VanishingPoint& vp);
std::string anchors_to_csv(const AnchorSet& anchors, bool with_xs = false);

// {"proposals": [{"conf": c, "xs": [...], "valid": [0/1...]}]}; a missing
// "valid" marks every row valid. Throws kParseError.
std::vector<ScoredProposal> proposals_from_json(const std::string& text);
std::string proposals_to_json(std::span<const ScoredProposal> proposals);

std::string report_to_json(const EvalReport& report);
std::string report_to_json(const TusimpleReport& report);
std::string gradcheck_to_json(std::span<const GradCheckResult> results);

std::string scene_to_json(const SyntheticScene& scene);
// Throws kParseError.
SyntheticScene scene_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct DatasetEntry {
  std::string image;       // relative image path
  std::string annotation;  // relative annotation path
  std::string category;    // may be empty
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;
};

// Every *.lines.txt under root, sorted by relative path. The category is
// the first directory component of the relative path, if any.
DatasetIndex index_culane(const std::filesystem::path& root);

// Pairs ground truth and predictions by relative path; missing prediction
// files count as empty.
std::vector<EvalImage> load_culane_eval(const std::filesystem::path& pred_dir,
                                        const std::filesystem::path& gt_dir,
                                        const ImageSpec& spec, std::vector<std::string>* warnings);

// Every record of every *.json file (one record per line) under a directory,
// files in name order.
std::vector<TusimpleRecord> load_tusimple_dir(const std::filesystem::path& dir);

// Pairs records by raw_file; throws kRowGridMismatch if a pair disagrees on
// h_samples.
std::vector<EvalImage> pair_tusimple(std::span<const TusimpleRecord> preds,
                                     std::span<const TusimpleRecord> gts);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SynthSettings {
  std::uint64_t seed = 1;
  int scenes = 1;
  int lanes = 4;
  double noise_px = 0.0;
};

struct EvalSettings {
  double iou_thresh = 0.5;
  double width_px = 30.0;
  double tusimple_x_px = 20.0;
};

struct Config {
  TrainConfig train;  // image spec, anchors, loss weights, PAM and training
  NmsParams nms;
  EvalSettings eval;
  SynthSettings synth;

  // Throws kConfigError naming the offending key.
  void validate() const;
};

// "key = value" lines; '#' starts a comment. Unknown keys, repeated keys
// and malformed values throw kConfigError naming the key (and line).
Config parse_config(const std::string& text);
// Every key with its current value, in schema order.
std::string config_to_text(const Config& config);
// Schema listing: key, default and meaning, one per line.
std::string config_schema();

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major
  Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  Rgb at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr Rgb kBackground{24, 24, 24};
inline constexpr Rgb kAnchorColor{70, 70, 110};
inline constexpr Rgb kVpColor{230, 40, 40};
Rgb lane_color(std::size_t index);

struct OverlayOptions {
  double lane_width_px = 3.0;
  double vp_radius_px = 5.0;
};

Image render_overlay(int height, int width, std::span<const LanePolyline> lanes,
                     std::span<const double> ys, const std::optional<VanishingPoint>& vp,
                     const AnchorSet* anchors, const OverlayOptions& options = {});

// Binary P6 / P5 encodings. Throws kIoError on write failure.
std::string encode_ppm(const Image& image);
void write_ppm(const std::filesystem::path& path, const Image& image);
std::string encode_pgm(const Grid<std::uint8_t>& grid, std::uint8_t on = 255);
void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& grid);
// Values in [0, 1] (clamped) mapped to 0..255 by rounding.
std::string encode_pgm(const Grid<double>& grid);
void write_pgm(const std::filesystem::path& path, const Grid<double>& grid);

}  // namespace lanestruct
