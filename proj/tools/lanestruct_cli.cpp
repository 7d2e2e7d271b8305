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

// lanestruct command line tool.

#include <cstdio>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lanestruct/anchoring.hpp"
#include "lanestruct/error.hpp"
#include "lanestruct/evalkit.hpp"
#include "lanestruct/io.hpp"
#include "lanestruct/lane_repr.hpp"
#include "lanestruct/losses.hpp"
#include "lanestruct/trainer.hpp"

namespace fs = std::filesystem;
using namespace lanestruct;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kIoError:
    case ErrorCode::kEmptyRaster:
    case ErrorCode::kRowGridMismatch:
    case ErrorCode::kDegenerateInput:
    case ErrorCode::kCollinearHorizontal:
    case ErrorCode::kNoIntersections:
    case ErrorCode::kTooFewLanes:
      return kExitData;
    default:
      return kExitInvariant;
  }
}

std::vector<double> parse_list(const std::string& text, std::size_t n, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": cannot parse '" + text + "'");
    }
  }
  if (out.size() != n) {
    throw UsageError(std::string(flag) + ": expected " + std::to_string(n) + " comma-separated values");
  }
  return out;
}

ImageSpec parse_spec(const std::string& text) {
  const std::vector<double> v = parse_list(text, 3, "--spec");
  ImageSpec spec{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
  spec.validate();
  return spec;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

std::vector<LanePolyline> load_lanes(const std::string& path, const ImageSpec& spec) {
  CulaneParse parsed = parse_culane(read_text_file(path), spec);
  for (const std::string& w : parsed.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
  return parsed.lanes;
}

std::vector<BoxLineCode> encode_all(std::span<const LanePolyline> lanes, const ImageSpec& spec) {
  std::vector<BoxLineCode> codes;
  for (const LanePolyline& lane : lanes) codes.push_back(encode(lane, spec));
  return codes;
}

std::string scene_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04zu", k);
  return buf;
}

std::vector<SyntheticScene> load_scene_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("scene_", 0) == 0 && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kIoError, "no scene_*.json files in " + dir.string());
  std::vector<SyntheticScene> scenes;
  for (const fs::path& f : files) scenes.push_back(scene_from_json(read_text_file(f)));
  return scenes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-line lane geometry, anchors, structural losses and lane evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  // encode
  std::string encode_in, encode_spec = "360,640,72", encode_out;
  auto* encode_cmd = app.add_subcommand("encode", "Box-line codes of CULane-format lanes as JSON");
  encode_cmd->add_option("annotations", encode_in, "lines file (x y pairs per lane)")->required();
  encode_cmd->add_option("--spec", encode_spec, "H,W,P")->capture_default_str();
  encode_cmd->add_option("--out", encode_out, "output file (default stdout)");

  // vp
  std::string vp_in, vp_spec = "360,640,72", vp_method = "mean", vp_mask_out, vp_out;
  int vp_mask_scale = 16;
  double vp_mask_radius = 16.0;
  auto* vp_cmd = app.add_subcommand("vp", "Vanishing point of the lanes as JSON");
  vp_cmd->add_option("annotations", vp_in, "lines file")->required();
  vp_cmd->add_option("--spec", vp_spec, "H,W,P")->capture_default_str();
  vp_cmd->add_option("--method", vp_method, "mean or lsq")
      ->check(CLI::IsMember({"mean", "lsq"}))
      ->capture_default_str();
  vp_cmd->add_option("--mask", vp_mask_out, "write the VP mask as PGM");
  vp_cmd->add_option("--mask-scale", vp_mask_scale, "mask cell size")->capture_default_str();
  vp_cmd->add_option("--mask-radius", vp_mask_radius, "mask radius in pixels")->capture_default_str();
  vp_cmd->add_option("--out", vp_out, "output file (default stdout)");

  // anchors
  std::string anchors_vp, anchors_spec = "360,640,72", anchors_out;
  AnchorParams anchor_params;
  bool anchors_xs = false;
  auto* anchors_cmd = app.add_subcommand("anchors", "Anchor set around a VP as CSV");
  anchors_cmd->add_option("--vp", anchors_vp, "X,Y")->required();
  anchors_cmd->add_option("--w", anchor_params.w_anchor, "lattice width")->capture_default_str();
  anchors_cmd->add_option("--s", anchor_params.s_anchor, "lattice step")->capture_default_str();
  anchors_cmd->add_option("--a", anchor_params.a_anchor, "angle step (deg)")->capture_default_str();
  anchors_cmd->add_option("--spec", anchors_spec, "H,W,P")->capture_default_str();
  anchors_cmd->add_flag("--with-xs", anchors_xs, "append the sampled x of every row");
  anchors_cmd->add_option("--out", anchors_out, "output file (default stdout)");

  // nms
  std::string nms_in, nms_out;
  NmsParams nms_params;
  auto* nms_cmd = app.add_subcommand("nms", "Line NMS over scored proposals");
  nms_cmd->add_option("proposals", nms_in, "proposals JSON")->required();
  nms_cmd->add_option("--dist", nms_params.dist_thresh_px, "distance threshold (px)")->capture_default_str();
  nms_cmd->add_option("--conf", nms_params.conf_thresh, "confidence threshold")->capture_default_str();
  nms_cmd->add_option("--out", nms_out, "output file (default stdout)");

  // eval
  std::string eval_format, eval_pred, eval_gt, eval_spec = "590,1640,72", eval_out;
  EvalSettings eval_settings;
  auto* eval_cmd = app.add_subcommand("eval", "F1 (culane) or point accuracy (tusimple) as JSON");
  eval_cmd->add_option("--format", eval_format, "culane or tusimple")
      ->required()
      ->check(CLI::IsMember({"culane", "tusimple"}));
  eval_cmd->add_option("pred", eval_pred, "prediction directory")->required();
  eval_cmd->add_option("gt", eval_gt, "ground-truth directory")->required();
  eval_cmd->add_option("--spec", eval_spec, "H,W,P of culane images")->capture_default_str();
  eval_cmd->add_option("--iou", eval_settings.iou_thresh, "IoU threshold")->capture_default_str();
  eval_cmd->add_option("--width", eval_settings.width_px, "lane width (px)")->capture_default_str();
  eval_cmd->add_option("--x-thresh", eval_settings.tusimple_x_px, "tusimple x tolerance (px)")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "output file (default stdout)");

  // gradcheck
  int gc_points = 100;
  std::uint64_t gc_seed = 7;
  double gc_tol = 1e-4;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference checks of every loss");
  gc_cmd->add_option("--points", gc_points, "random points per loss")->capture_default_str();
  gc_cmd->add_option("--seed", gc_seed, "seed")->capture_default_str();
  gc_cmd->add_option("--tol", gc_tol, "max relative error")->capture_default_str();
  gc_cmd->add_option("--out", gc_out, "output file (default stdout)");

  // synth
  std::uint64_t synth_seed = 1;
  int synth_scenes = 1, synth_lanes = 4;
  double synth_noise = 0.0;
  std::string synth_out, synth_spec = "360,640,72";
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic scene directory");
  synth_cmd->add_option("--seed", synth_seed, "seed of the first scene")->capture_default_str();
  synth_cmd->add_option("--scenes", synth_scenes, "number of scenes")->capture_default_str();
  synth_cmd->add_option("--lanes", synth_lanes, "lanes per scene")->capture_default_str();
  synth_cmd->add_option("--noise", synth_noise, "x noise sigma (px)")->capture_default_str();
  synth_cmd->add_option("--spec", synth_spec, "H,W,P")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  // train
  std::string train_config, train_out, train_data;
  bool train_schema = false;
  auto* train_cmd = app.add_subcommand("train", "Train the scorer; writes params.bin and train_log.csv");
  train_cmd->add_option("--config", train_config, "key = value config file");
  train_cmd->add_option("--data", train_data, "scene directory from synth (default: generate)");
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_flag("--schema", train_schema, "print the config schema and exit");

  // render
  std::string render_in, render_out, render_spec = "360,640,72";
  bool render_anchors = false, render_no_vp = false;
  auto* render_cmd = app.add_subcommand("render", "Overlay of a scene as a PPM image");
  render_cmd->add_option("scene", render_in, "scene JSON or lines file")->required();
  render_cmd->add_option("--out", render_out, "output .ppm")->required();
  render_cmd->add_option("--spec", render_spec, "H,W,P for lines files")->capture_default_str();
  render_cmd->add_flag("--anchors", render_anchors, "draw the anchors around the VP");
  render_cmd->add_flag("--no-vp", render_no_vp, "omit the VP disc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*encode_cmd) {
      const ImageSpec spec = parse_spec(encode_spec);
      const std::vector<LanePolyline> lanes = load_lanes(encode_in, spec);
      emit(codes_to_json(encode_all(lanes, spec)), encode_out);
    } else if (*vp_cmd) {
      const ImageSpec spec = parse_spec(vp_spec);
      const std::vector<LanePolyline> lanes = load_lanes(vp_in, spec);
      const VanishingPoint vp = approximate_vp(
          encode_all(lanes, spec), vp_method == "lsq" ? VpMethod::kLeastSquares : VpMethod::kPairwiseMean);
      if (!vp_mask_out.empty()) {
        write_pgm(vp_mask_out, vp_mask(vp, spec, vp_mask_scale, vp_mask_radius).grid);
      }
      emit(vp_to_json(vp), vp_out);
    } else if (*anchors_cmd) {
      const std::vector<double> xy = parse_list(anchors_vp, 2, "--vp");
      const AnchorSet set = generate_anchors({xy[0], xy[1], 0}, anchor_params, parse_spec(anchors_spec));
      emit(anchors_to_csv(set, anchors_xs), anchors_out);
    } else if (*nms_cmd) {
      const std::vector<ScoredProposal> props = proposals_from_json(read_text_file(nms_in));
      emit(proposals_to_json(line_nms(props, nms_params)), nms_out);
    } else if (*eval_cmd) {
      if (eval_format == "culane") {
        const ImageSpec spec = parse_spec(eval_spec);
        std::vector<std::string> warnings;
        const std::vector<EvalImage> images = load_culane_eval(eval_pred, eval_gt, spec, &warnings);
        for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
        emit(report_to_json(match_and_score(images, spec.height, spec.width,
                                            eval_settings.iou_thresh, eval_settings.width_px)),
             eval_out);
      } else {
        const std::vector<TusimpleRecord> preds = load_tusimple_dir(eval_pred);
        const std::vector<TusimpleRecord> gts = load_tusimple_dir(eval_gt);
        const std::vector<EvalImage> images = pair_tusimple(preds, gts);
        emit(report_to_json(tusimple_accuracy(images, eval_settings.tusimple_x_px)), eval_out);
      }
    } else if (*gc_cmd) {
      if (gc_points < 1) throw UsageError("--points must be at least 1");
      const std::vector<GradCheckResult> results = run_gradient_checks(gc_points, gc_seed, gc_tol);
      emit(gradcheck_to_json(results), gc_out);
      for (const GradCheckResult& r : results) {
        if (!r.passed) return kExitInvariant;
      }
    } else if (*synth_cmd) {
      const ImageSpec spec = parse_spec(synth_spec);
      if (synth_scenes < 1) throw UsageError("--scenes must be at least 1");
      fs::create_directories(synth_out);
      std::string index;
      for (int k = 0; k < synth_scenes; ++k) {
        const SyntheticScene scene =
            generate_scene(synth_seed + static_cast<std::uint64_t>(k), spec, synth_lanes, synth_noise);
        const std::string name = scene_name(static_cast<std::size_t>(k));
        write_text_file(fs::path(synth_out) / (name + ".json"), scene_to_json(scene));
        write_text_file(fs::path(synth_out) / (name + ".lines.txt"), serialize_culane(scene.lanes, spec));
        index += name + ".jpg " + name + ".lines.txt\n";
      }
      write_text_file(fs::path(synth_out) / "index.txt", index);
    } else if (*train_cmd) {
      if (train_schema) {
        std::cout << config_schema();
        return kExitOk;
      }
      if (train_out.empty()) throw UsageError("train: --out is required");
      Config config = train_config.empty() ? Config{} : parse_config(read_text_file(train_config));
      config.validate();
      std::vector<SyntheticScene> scenes;
      if (!train_data.empty()) {
        scenes = load_scene_dir(train_data);
      } else {
        for (int k = 0; k < config.synth.scenes; ++k) {
          scenes.push_back(generate_scene(config.synth.seed + static_cast<std::uint64_t>(k),
                                          config.train.spec, config.synth.lanes, config.synth.noise_px));
        }
      }
      const TrainResult result = train(scenes, config.train);
      fs::create_directories(train_out);
      {
        std::ofstream blob(fs::path(train_out) / "params.bin", std::ios::binary);
        write_params(result.params, blob);
      }
      std::ostringstream csv;
      write_log_csv(result.log, csv);
      write_text_file(fs::path(train_out) / "train_log.csv", csv.str());

      // Post-NMS predictions on the training scenes.
      const TrainingProblem problem(scenes, config.train);
      std::vector<EvalImage> images;
      for (std::size_t s = 0; s < scenes.size(); ++s) {
        EvalImage im;
        im.name = scene_name(s);
        im.ys = config.train.spec.rows();
        im.gts = scenes[s].lanes;
        for (const ScoredProposal& p : predict_lanes(problem.scene(s), result.params, config.train.spec, config.nms)) {
          im.preds.push_back(proposal_to_lane(p));
        }
        images.push_back(std::move(im));
      }
      const EvalReport report = match_and_score(images, config.train.spec.height, config.train.spec.width,
                                                config.eval.iou_thresh, config.eval.width_px);
      write_text_file(fs::path(train_out) / "eval.json", report_to_json(report));
      if (result.log.flagged) {
        std::cerr << "warning: total loss rose over a 10-epoch window at epoch "
                  << result.log.first_flagged_epoch << "\n";
      }
      const EpochRecord last = result.log.epochs.empty() ? EpochRecord{} : result.log.epochs.back();
      std::printf("epochs %zu final_total %.6g flagged %s f1 %.4f\n", result.log.epochs.size(),
                  last.total, result.log.flagged ? "yes" : "no", report.f1);
    } else if (*render_cmd) {
      std::vector<LanePolyline> lanes;
      ImageSpec spec;
      std::optional<VanishingPoint> vp;
      if (fs::path(render_in).extension() == ".json") {
        const SyntheticScene scene = scene_from_json(read_text_file(render_in));
        spec = scene.spec;
        lanes = scene.lanes;
        vp = scene.vp_true;
      } else {
        spec = parse_spec(render_spec);
        lanes = load_lanes(render_in, spec);
        if (lanes.size() >= 2) vp = approximate_vp(encode_all(lanes, spec));
      }
      std::optional<AnchorSet> anchors;
      if (render_anchors) {
        if (!vp) throw Error(ErrorCode::kTooFewLanes, "anchors need a VP, which needs two lanes");
        anchors = generate_anchors(*vp, AnchorParams{}, spec);
      }
      const std::vector<double> ys = spec.rows();
      const Image img = render_overlay(spec.height, spec.width, lanes, ys,
                                       render_no_vp ? std::nullopt : vp, anchors ? &*anchors : nullptr);
      write_ppm(render_out, img);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
