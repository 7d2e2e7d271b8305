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

#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "lanestruct/error.hpp"
#include "lanestruct/io.hpp"

namespace lanestruct {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kConfigError, key + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    fail(key, "cannot parse '" + text + "'");
  }
  return v;
}

struct Field {
  const char* key;
  const char* help;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};


template <typename Ref>
Field real_field(const char* key, const char* help, Ref ref) {
  return {key, help,
          [ref, key](Config& c, const std::string& v) { ref(c) = parse_number<double>(key, v); },
          [ref](const Config& c) { Config copy = c;
            return num(ref(copy)); }};
}

template <typename Ref>
Field int_field(const char* key, const char* help, Ref ref) {
  return {key, help,
          [ref, key](Config& c, const std::string& v) { ref(c) = parse_number<int>(key, v); },
          [ref](const Config& c) { Config copy = c;
            return std::to_string(ref(copy)); }};
}

template <typename Ref>
Field u64_field(const char* key, const char* help, Ref ref) {
  return {key, help,
          [ref, key](Config& c, const std::string& v) {
            ref(c) = parse_number<std::uint64_t>(key, v);
          },
          [ref](const Config& c) { Config copy = c;
            return std::to_string(ref(copy)); }};
}

template <typename Ref>
Field bool_field(const char* key, const char* help, Ref ref) {
  return {key, help,
          [ref, key](Config& c, const std::string& v) {
            if (v == "true" || v == "1") {
              ref(c) = true;
            } else if (v == "false" || v == "0") {
              ref(c) = false;
            } else {
              fail(key, "expected true or false, got '" + v + "'");
            }
          },
          [ref](const Config& c) { Config copy = c;
            return std::string(ref(copy) ? "true" : "false"); }};
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      int_field("image.height", "image height H in pixels", [](Config& c) -> int& { return c.train.spec.height; }),
      int_field("image.width", "image width W in pixels", [](Config& c) -> int& { return c.train.spec.width; }),
      int_field("image.key_points", "number of key-point rows P", [](Config& c) -> int& { return c.train.spec.key_points; }),
      real_field("anchor.w", "anchor lattice width around the VP", [](Config& c) -> double& { return c.train.anchors.w_anchor; }),
      real_field("anchor.s", "anchor lattice step", [](Config& c) -> double& { return c.train.anchors.s_anchor; }),
      real_field("anchor.a", "anchor angle step in degrees", [](Config& c) -> double& { return c.train.anchors.a_anchor; }),
      real_field("loss.vp", "weight of the VP mask loss", [](Config& c) -> double& { return c.train.weights.vp; }),
      real_field("loss.confidence", "weight of the confidence loss", [](Config& c) -> double& { return c.train.weights.confidence; }),
      real_field("loss.regression", "weight of the offset regression loss", [](Config& c) -> double& { return c.train.weights.regression; }),
      real_field("loss.pixel", "weight of the segmentation loss", [](Config& c) -> double& { return c.train.weights.pixel; }),
      real_field("loss.lane", "weight of the bird's-eye parallelism loss", [](Config& c) -> double& { return c.train.weights.lane; }),
      real_field("loss.image", "weight of the attention regression loss", [](Config& c) -> double& { return c.train.weights.image; }),
      real_field("nms.dist", "line NMS distance threshold in pixels", [](Config& c) -> double& { return c.nms.dist_thresh_px; }),
      real_field("nms.conf", "confidence threshold before NMS", [](Config& c) -> double& { return c.nms.conf_thresh; }),
      real_field("eval.iou", "IoU threshold of a match", [](Config& c) -> double& { return c.eval.iou_thresh; }),
      real_field("eval.width", "lane width for IoU in pixels", [](Config& c) -> double& { return c.eval.width_px; }),
      real_field("eval.tusimple_x", "point tolerance of the point accuracy", [](Config& c) -> double& { return c.eval.tusimple_x_px; }),
      int_field("pam.scale", "attention map cell size", [](Config& c) -> int& { return c.train.pam_scale; }),
      real_field("pam.sigma_x", "attention sigma along x; 0 means W / 4", [](Config& c) -> double& { return c.train.pam_sigma_x; }),
      real_field("pam.sigma_y", "attention sigma along y; 0 means H / 4", [](Config& c) -> double& { return c.train.pam_sigma_y; }),
      bool_field("pam.inverted", "weight by 1 - E instead of E", [](Config& c) -> bool& { return c.train.pam_inverted; }),
      int_field("vp.scale", "VP mask cell size", [](Config& c) -> int& { return c.train.vp_scale; }),
      real_field("vp.radius", "VP mask radius in pixels", [](Config& c) -> double& { return c.train.vp_radius_px; }),
      int_field("seg.scale", "segmentation grid cell size", [](Config& c) -> int& { return c.train.seg_scale; }),
      real_field("seg.width", "segmentation lane width in pixels", [](Config& c) -> double& { return c.train.seg_width_px; }),
      int_field("feature.scale", "feature grid cell size", [](Config& c) -> int& { return c.train.features.scale; }),
      real_field("feature.mask_width", "lane width of the mask channel", [](Config& c) -> double& { return c.train.features.mask_width; }),
      int_field("train.epochs", "number of full-batch epochs", [](Config& c) -> int& { return c.train.epochs; }),
      real_field("train.lr", "step size", [](Config& c) -> double& { return c.train.lr; }),
      {"train.optimizer", "adam or gd",
       [](Config& c, const std::string& v) {
         if (v == "adam") {
           c.train.optimizer = Optimizer::kAdam;
         } else if (v == "gd") {
           c.train.optimizer = Optimizer::kGradientDescent;
         } else {
           fail("train.optimizer", "expected adam or gd, got '" + v + "'");
         }
       },
       [](const Config& c) {
         return std::string(c.train.optimizer == Optimizer::kAdam ? "adam" : "gd");
       }},
      u64_field("train.seed", "scorer initialization seed", [](Config& c) -> std::uint64_t& { return c.train.seed; }),
      int_field("train.warmup", "epochs exempt from the monotonicity flag", [](Config& c) -> int& { return c.train.warmup; }),
      real_field("train.positive_radius", "mean distance for extra positives", [](Config& c) -> double& { return c.train.positive_radius_px; }),
      real_field("train.ignore_radius", "confidence ignored up to this distance", [](Config& c) -> double& { return c.train.ignore_radius_px; }),
      real_field("train.init_std", "std of the initial scorer weights", [](Config& c) -> double& { return c.train.init_std; }),
      u64_field("synth.seed", "seed of the first synthetic scene", [](Config& c) -> std::uint64_t& { return c.synth.seed; }),
      int_field("synth.scenes", "number of synthetic scenes", [](Config& c) -> int& { return c.synth.scenes; }),
      int_field("synth.lanes", "lanes per synthetic scene", [](Config& c) -> int& { return c.synth.lanes; }),
      real_field("synth.noise", "x noise sigma in pixels", [](Config& c) -> double& { return c.synth.noise_px; }),
  };
  return fields;
}

}  // namespace

void Config::validate() const {
  auto check = [](bool ok, const char* key, const char* what) {
    if (!ok) fail(key, what);
  };
  auto finite_pos = [](double v) { return std::isfinite(v) && v > 0; };
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0; };
  const TrainConfig& t = train;
  check(t.spec.height > 0, "image.height", "must be positive");
  check(t.spec.width > 0, "image.width", "must be positive");
  check(t.spec.key_points >= 2, "image.key_points", "must be at least 2");
  check(finite_nonneg(t.anchors.w_anchor), "anchor.w", "must be non-negative");
  check(finite_pos(t.anchors.s_anchor), "anchor.s", "must be positive");
  if (t.anchors.s_anchor > 0) {
    const double steps = t.anchors.w_anchor / t.anchors.s_anchor;
    check(std::abs(steps - std::round(steps)) <= 1e-9, "anchor.w", "must be a multiple of anchor.s");
  }
  check(t.anchors.a_anchor > 0 && t.anchors.a_anchor < 180, "anchor.a", "must lie in (0, 180)");
  check(finite_nonneg(t.weights.vp), "loss.vp", "must be non-negative");
  check(finite_nonneg(t.weights.confidence), "loss.confidence", "must be non-negative");
  check(finite_nonneg(t.weights.regression), "loss.regression", "must be non-negative");
  check(finite_nonneg(t.weights.pixel), "loss.pixel", "must be non-negative");
  check(finite_nonneg(t.weights.lane), "loss.lane", "must be non-negative");
  check(finite_nonneg(t.weights.image), "loss.image", "must be non-negative");
  check(finite_nonneg(nms.dist_thresh_px), "nms.dist", "must be non-negative");
  check(nms.conf_thresh >= 0 && nms.conf_thresh <= 1, "nms.conf", "must lie in [0, 1]");
  check(eval.iou_thresh > 0 && eval.iou_thresh <= 1, "eval.iou", "must lie in (0, 1]");
  check(finite_pos(eval.width_px), "eval.width", "must be positive");
  check(finite_nonneg(eval.tusimple_x_px), "eval.tusimple_x", "must be non-negative");
  check(synth.scenes >= 1, "synth.scenes", "must be at least 1");
  check(synth.lanes >= 2 && synth.lanes <= 8, "synth.lanes", "must lie in [2, 8]");
  check(finite_nonneg(synth.noise_px), "synth.noise", "must be non-negative");
  // The remaining training fields report their own keys.
  t.validate();
}

Config parse_config(const std::string& text) {
  Config config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigError,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string where = key + " (line " + std::to_string(line_no) + ")";
    const Field* field = nullptr;
    for (const Field& f : schema()) {
      if (key == f.key) field = &f;
    }
    if (!field) fail(where, "unknown key");
    if (!seen.insert(key).second) fail(where, "repeated key");
    if (value.empty()) fail(where, "missing value");
    try {
      field->set(config, value);
    } catch (const Error&) {
      fail(where, "cannot parse '" + value + "'");
    }
  }
  config.validate();
  return config;
}

std::string config_to_text(const Config& config) {
  std::string out;
  for (const Field& f : schema()) out += std::string(f.key) + " = " + f.get(config) + '\n';
  return out;
}

std::string config_schema() {
  const Config defaults;
  std::string out;
  for (const Field& f : schema()) {
    out += std::string(f.key) + " = " + f.get(defaults) + "  # " + f.help + '\n';
  }
  return out;
}

}  // namespace lanestruct
