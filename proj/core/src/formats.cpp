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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "lanestruct/error.hpp"
#include "lanestruct/io.hpp"

namespace lanestruct {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string number_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Integral values stay integers so records round-trip textually.
ojson number_json(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
    return static_cast<std::int64_t>(v);
  }
  return v;
}

ojson mask_json(const RowMask& m) {
  ojson a = ojson::array();
  for (std::uint8_t v : m) a.push_back(static_cast<int>(v));
  return a;
}

ojson doubles_json(std::span<const double> v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

ojson parse_json(const std::string& text, const std::string& what) {
  try {
    return ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::kParseError, what + ": " + e.what());
  }
}

template <typename T>
T get_field(const ojson& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kParseError, what + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const ojson::exception&) {
    throw Error(ErrorCode::kParseError, what + ": field '" + key + "' has the wrong type");
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

// ---------------------------------------------------------------------------

CulaneParse parse_culane(const std::string& text, const ImageSpec& spec) {
  spec.validate();
  const std::vector<double> ys = spec.rows();
  CulaneParse out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<double> values;
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
      }
      values.push_back(v);
    }
    if (values.empty()) continue;
    if (values.size() % 2 != 0) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": odd number of coordinates");
    }
    std::vector<Point2> pts;
    for (std::size_t k = 0; k < values.size(); k += 2) {
      if (values[k] >= 0.0) pts.push_back({values[k], values[k + 1]});
    }
    std::stable_sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.y < b.y; });
    pts.erase(std::unique(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.y == b.y; }),
              pts.end());
    if (pts.size() < 2) {
      out.warnings.push_back("line " + std::to_string(line_no) +
                             ": fewer than two points, lane skipped");
      continue;
    }
    LanePolyline lane;
    lane.xs.assign(ys.size(), 0.0);
    lane.valid.assign(ys.size(), 0);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double y = ys[i];
      if (y < pts.front().y || y > pts.back().y) continue;
      while (seg + 2 < pts.size() && pts[seg + 1].y < y) ++seg;
      const Point2 a = pts[seg], b = pts[seg + 1];
      const double t = (y - a.y) / (b.y - a.y);
      lane.xs[i] = a.x + t * (b.x - a.x);
      lane.valid[i] = 1;
    }
    if (lane.valid_count() < 2) {
      out.warnings.push_back("line " + std::to_string(line_no) +
                             ": spans fewer than two key-point rows, lane skipped");
      continue;
    }
    out.lanes.push_back(std::move(lane));
    out.point_counts.push_back(static_cast<int>(pts.size()));
  }
  return out;
}

std::string serialize_culane(std::span<const LanePolyline> lanes, const ImageSpec& spec) {
  const std::vector<double> ys = spec.rows();
  std::string out;
  for (const LanePolyline& lane : lanes) {
    std::string line;
    for (std::size_t i = lane.xs.size(); i-- > 0;) {
      if (!lane.valid[i]) continue;
      if (!line.empty()) line += ' ';
      line += number_text(lane.xs[i]) + ' ' + number_text(ys[i]);
    }
    out += line + '\n';
  }
  return out;
}

TusimpleRecord parse_tusimple(const std::string& json_line) {
  const std::string what = "tusimple record";
  const ojson j = parse_json(json_line, what);
  if (!j.is_object()) throw Error(ErrorCode::kParseError, what + ": not an object");
  TusimpleRecord rec;
  rec.h_samples = get_field<std::vector<double>>(j, "h_samples", what);
  const auto lanes = get_field<std::vector<std::vector<double>>>(j, "lanes", what);
  if (j.contains("raw_file")) rec.raw_file = get_field<std::string>(j, "raw_file", what);
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    if (lanes[k].size() != rec.h_samples.size()) {
      throw Error(ErrorCode::kParseError, what + ": lane " + std::to_string(k) + " has " +
                                              std::to_string(lanes[k].size()) +
                                              " entries for " +
                                              std::to_string(rec.h_samples.size()) + " h_samples");
    }
    LanePolyline lane;
    lane.xs.assign(lanes[k].size(), 0.0);
    lane.valid.assign(lanes[k].size(), 0);
    for (std::size_t i = 0; i < lanes[k].size(); ++i) {
      if (lanes[k][i] >= 0.0) {
        lane.xs[i] = lanes[k][i];
        lane.valid[i] = 1;
      }
    }
    rec.lanes.push_back(std::move(lane));
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "lanes" || it.key() == "h_samples" || it.key() == "raw_file") continue;
    rec.extra.emplace_back(it.key(), it.value().dump());
  }
  return rec;
}

std::string serialize_tusimple(const TusimpleRecord& record) {
  ojson j;
  ojson lanes = ojson::array();
  for (const LanePolyline& lane : record.lanes) {
    ojson xs = ojson::array();
    for (std::size_t i = 0; i < lane.xs.size(); ++i) {
      xs.push_back(lane.valid[i] ? number_json(lane.xs[i]) : ojson(-2));
    }
    lanes.push_back(xs);
  }
  j["lanes"] = lanes;
  ojson hs = ojson::array();
  for (double y : record.h_samples) hs.push_back(number_json(y));
  j["h_samples"] = hs;
  j["raw_file"] = record.raw_file;
  for (const auto& [key, text] : record.extra) j[key] = ojson::parse(text);
  return j.dump();
}

// ---------------------------------------------------------------------------

std::string codes_to_json(std::span<const BoxLineCode> codes) {
  ojson arr = ojson::array();
  for (std::size_t k = 0; k < codes.size(); ++k) {
    const BoxLineCode& c = codes[k];
    ojson j;
    j["lane"] = k;
    j["a"] = c.center.a;
    j["b"] = c.center.b;
    j["c"] = c.center.c;
    j["theta"] = c.center.theta;
    j["rect_h"] = c.rect_h;
    j["rect_w"] = c.rect_w;
    j["rect_center"] = {c.rect_center.x, c.rect_center.y};
    j["dx"] = doubles_json(c.dx);
    j["valid"] = mask_json(c.valid);
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::string vp_to_json(const VanishingPoint& vp) {
  ojson j;
  j["x"] = vp.x;
  j["y"] = vp.y;
  j["support"] = vp.support;
  return j.dump(2) + "\n";
}

std::string anchors_to_csv(const AnchorSet& anchors, bool with_xs) {
  std::string out = "point_index,angle_deg,origin_x,origin_y,a,b,c";
  if (with_xs && !anchors.anchors.empty()) {
    for (std::size_t i = 0; i < anchors.anchors.front().sampled_xs.size(); ++i) {
      out += ",x" + std::to_string(i);
    }
  }
  out += '\n';
  for (const Anchor& a : anchors.anchors) {
    out += std::to_string(a.point_index) + ',' + number_text(a.theta) + ',' +
           number_text(a.origin.x) + ',' + number_text(a.origin.y) + ',' + number_text(a.line.a) +
           ',' + number_text(a.line.b) + ',' + number_text(a.line.c);
    if (with_xs) {
      for (double x : a.sampled_xs) out += ',' + number_text(x);
    }
    out += '\n';
  }
  return out;
}

std::vector<ScoredProposal> proposals_from_json(const std::string& text) {
  const std::string what = "proposals";
  const ojson j = parse_json(text, what);
  const ojson list = j.is_array() ? j : (j.contains("proposals") ? j.at("proposals") : ojson());
  if (!list.is_array()) throw Error(ErrorCode::kParseError, what + ": expected a proposal list");
  std::vector<ScoredProposal> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string item = what + "[" + std::to_string(k) + "]";
    ScoredProposal p;
    p.conf = get_field<double>(list[k], "conf", item);
    p.xs = get_field<std::vector<double>>(list[k], "xs", item);
    if (list[k].contains("valid")) {
      const auto v = get_field<std::vector<int>>(list[k], "valid", item);
      if (v.size() != p.xs.size()) {
        throw Error(ErrorCode::kParseError, item + ": 'valid' and 'xs' differ in length");
      }
      for (int b : v) p.valid.push_back(b != 0);
    } else {
      p.valid.assign(p.xs.size(), 1);
    }
    p.len = static_cast<int>(std::count(p.valid.begin(), p.valid.end(), 1));
    out.push_back(std::move(p));
  }
  return out;
}

std::string proposals_to_json(std::span<const ScoredProposal> proposals) {
  ojson arr = ojson::array();
  for (const ScoredProposal& p : proposals) {
    ojson j;
    j["conf"] = p.conf;
    j["xs"] = doubles_json(p.xs);
    j["valid"] = mask_json(p.valid);
    arr.push_back(j);
  }
  ojson root;
  root["proposals"] = arr;
  return root.dump(2) + "\n";
}

std::string report_to_json(const EvalReport& report) {
  ojson j;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  ojson images = ojson::array();
  for (const ImageResult& r : report.per_image) {
    ojson im;
    im["name"] = r.name;
    im["category"] = r.category;
    im["tp"] = r.tp;
    im["fp"] = r.fp;
    im["fn"] = r.fn;
    ojson matches = ojson::array();
    for (const LaneMatch& m : r.matches) matches.push_back({{"pred", m.pred}, {"gt", m.gt}, {"iou", m.iou}});
    im["matches"] = matches;
    images.push_back(im);
  }
  j["per_image"] = images;
  return j.dump(2) + "\n";
}

std::string report_to_json(const TusimpleReport& report) {
  ojson j;
  j["accuracy"] = report.accuracy;
  j["hits"] = report.hits;
  j["gt_points"] = report.gt_points;
  ojson images = ojson::array();
  for (const TusimpleImageResult& r : report.per_image) {
    ojson im;
    im["name"] = r.name;
    im["hits"] = r.hits;
    im["gt_points"] = r.gt_points;
    ojson matches = ojson::array();
    for (const LaneMatch& m : r.matches) {
      matches.push_back({{"pred", m.pred}, {"gt", m.gt}, {"hits", static_cast<long>(m.iou)}});
    }
    im["matches"] = matches;
    images.push_back(im);
  }
  j["per_image"] = images;
  return j.dump(2) + "\n";
}

std::string gradcheck_to_json(std::span<const GradCheckResult> results) {
  ojson arr = ojson::array();
  bool all = true;
  for (const GradCheckResult& r : results) {
    arr.push_back({{"loss", r.loss},
                   {"max_rel_error", r.max_rel_error},
                   {"points", r.points},
                   {"evaluations", r.evaluations},
                   {"passed", r.passed}});
    all = all && r.passed;
  }
  ojson j;
  j["passed"] = all;
  j["checks"] = arr;
  return j.dump(2) + "\n";
}

std::string scene_to_json(const SyntheticScene& scene) {
  ojson j;
  j["seed"] = scene.seed;
  j["spec"] = {{"height", scene.spec.height},
               {"width", scene.spec.width},
               {"key_points", scene.spec.key_points}};
  j["homography"] = doubles_json(scene.homography_true.h);
  j["vp"] = {{"x", scene.vp_true.x}, {"y", scene.vp_true.y}, {"support", scene.vp_true.support}};
  j["ground_offsets"] = doubles_json(scene.ground_offsets);
  ojson lanes = ojson::array();
  for (const LanePolyline& lane : scene.lanes) {
    lanes.push_back({{"xs", doubles_json(lane.xs)}, {"valid", mask_json(lane.valid)}});
  }
  j["lanes"] = lanes;
  return j.dump(2) + "\n";
}

SyntheticScene scene_from_json(const std::string& text) {
  const std::string what = "scene";
  const ojson j = parse_json(text, what);
  SyntheticScene s;
  s.seed = get_field<std::uint64_t>(j, "seed", what);
  const ojson spec = j.contains("spec") ? j.at("spec") : ojson();
  s.spec.height = get_field<int>(spec, "height", what + ".spec");
  s.spec.width = get_field<int>(spec, "width", what + ".spec");
  s.spec.key_points = get_field<int>(spec, "key_points", what + ".spec");
  try {
    s.spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, what + ".spec: " + e.what());
  }
  const auto h = get_field<std::vector<double>>(j, "homography", what);
  if (h.size() != 6) throw Error(ErrorCode::kParseError, what + ": homography needs 6 values");
  std::copy(h.begin(), h.end(), s.homography_true.h.begin());
  const ojson vp = j.contains("vp") ? j.at("vp") : ojson();
  s.vp_true.x = get_field<double>(vp, "x", what + ".vp");
  s.vp_true.y = get_field<double>(vp, "y", what + ".vp");
  s.vp_true.support = get_field<int>(vp, "support", what + ".vp");
  s.ground_offsets = get_field<std::vector<double>>(j, "ground_offsets", what);
  if (!j.contains("lanes") || !j.at("lanes").is_array()) {
    throw Error(ErrorCode::kParseError, what + ": missing lane list");
  }
  for (std::size_t k = 0; k < j.at("lanes").size(); ++k) {
    const std::string item = what + ".lanes[" + std::to_string(k) + "]";
    const ojson& l = j.at("lanes")[k];
    LanePolyline lane;
    lane.xs = get_field<std::vector<double>>(l, "xs", item);
    for (int v : get_field<std::vector<int>>(l, "valid", item)) lane.valid.push_back(v != 0);
    try {
      validate_lane(lane, s.spec.key_points);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, item + ": " + e.what());
    }
    s.lanes.push_back(std::move(lane));
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

DatasetIndex index_culane(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIoError, "not a directory: " + root.string());
  DatasetIndex index;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    if (!ends_with(rel, ".lines.txt")) continue;
    DatasetEntry e;
    e.annotation = rel;
    e.image = rel.substr(0, rel.size() - std::string(".lines.txt").size()) + ".jpg";
    const auto slash = rel.find('/');
    if (slash != std::string::npos) e.category = rel.substr(0, slash);
    index.entries.push_back(std::move(e));
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.annotation < b.annotation; });
  return index;
}

std::vector<EvalImage> load_culane_eval(const fs::path& pred_dir, const fs::path& gt_dir,
                                        const ImageSpec& spec, std::vector<std::string>* warnings) {
  if (!fs::is_directory(pred_dir)) {
    throw Error(ErrorCode::kIoError, "not a directory: " + pred_dir.string());
  }
  std::vector<EvalImage> images;
  for (const DatasetEntry& e : index_culane(gt_dir).entries) {
    EvalImage im;
    im.name = e.annotation;
    im.category = e.category;
    im.ys = spec.rows();
    auto load = [&](const fs::path& p, std::vector<LanePolyline>& dst) {
      CulaneParse parsed;
      try {
        parsed = parse_culane(read_text_file(p), spec);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kParseError) throw;
        throw Error(ErrorCode::kParseError, p.string() + ": " + err.what());
      }
      dst = std::move(parsed.lanes);
      if (warnings) {
        for (const std::string& w : parsed.warnings) warnings->push_back(p.string() + ": " + w);
      }
    };
    load(gt_dir / e.annotation, im.gts);
    const fs::path pred = pred_dir / e.annotation;
    if (fs::exists(pred)) load(pred, im.preds);
    images.push_back(std::move(im));
  }
  return images;
}

std::vector<TusimpleRecord> load_tusimple_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TusimpleRecord> out;
  for (const fs::path& f : files) {
    std::istringstream in(read_text_file(f));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.push_back(parse_tusimple(line));
      } catch (const Error& err) {
        throw Error(ErrorCode::kParseError,
                    f.string() + ":" + std::to_string(line_no) + ": " + err.what());
      }
    }
  }
  return out;
}

std::vector<EvalImage> pair_tusimple(std::span<const TusimpleRecord> preds,
                                     std::span<const TusimpleRecord> gts) {
  std::map<std::string, const TusimpleRecord*> by_file;
  for (const TusimpleRecord& p : preds) by_file.emplace(p.raw_file, &p);
  std::vector<EvalImage> images;
  for (const TusimpleRecord& g : gts) {
    EvalImage im;
    im.name = g.raw_file;
    im.ys = g.h_samples;
    im.gts = g.lanes;
    const auto it = by_file.find(g.raw_file);
    if (it != by_file.end()) {
      if (it->second->h_samples != g.h_samples) {
        throw Error(ErrorCode::kRowGridMismatch, g.raw_file + ": prediction h_samples differ");
      }
      im.preds = it->second->lanes;
    }
    images.push_back(std::move(im));
  }
  return images;
}

}  // namespace lanestruct
