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
#include <cmath>
#include <fstream>
#include <string>

#include "lanestruct/error.hpp"
#include "lanestruct/io.hpp"
#include "lanestruct/structures.hpp"

namespace lanestruct {

namespace {

void paint_polyline(Image& img, std::span<const Point2> pts, double width, Rgb color) {
  for_each_polyline_cell(pts, img.height, img.width, 1, width,
                         [&](int r, int c) { img.at(c, r) = color; });
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace

Rgb lane_color(std::size_t index) {
  static constexpr Rgb kPalette[] = {{255, 200, 0},  {0, 200, 255},  {80, 255, 80},
                                     {255, 80, 200}, {255, 140, 40}, {160, 120, 255},
                                     {255, 255, 160}, {40, 255, 200}};
  return kPalette[index % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

Image render_overlay(int height, int width, std::span<const LanePolyline> lanes,
                     std::span<const double> ys, const std::optional<VanishingPoint>& vp,
                     const AnchorSet* anchors, const OverlayOptions& options) {
  if (height <= 0 || width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "overlay needs positive dimensions");
  }
  Image img(width, height, kBackground);
  if (anchors) {
    for (const Anchor& a : anchors->anchors) {
      std::vector<Point2> pts;
      for (std::size_t i = 0; i < ys.size() && i < a.sampled_xs.size(); ++i) {
        pts.push_back({a.sampled_xs[i], ys[i]});
      }
      paint_polyline(img, pts, 1.0, kAnchorColor);
    }
  }
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    if (lanes[k].xs.size() != ys.size()) {
      throw Error(ErrorCode::kRowGridMismatch, "lane does not match the row grid");
    }
    const std::vector<Point2> pts = lanes[k].points(ys);
    paint_polyline(img, pts, options.lane_width_px, lane_color(k));
  }
  if (vp) {
    const Point2 c{vp->x, vp->y};
    const std::vector<Point2> disc{c};
    paint_polyline(img, disc, 2.0 * options.vp_radius_px, kVpColor);
  }
  return img;
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.reserve(out.size() + image.pixels.size() * 3);
  for (const Rgb& p : image.pixels) {
    out.push_back(static_cast<char>(p.r));
    out.push_back(static_cast<char>(p.g));
    out.push_back(static_cast<char>(p.b));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  write_bytes(path, encode_ppm(image));
}

std::string encode_pgm(const Grid<std::uint8_t>& grid, std::uint8_t on) {
  std::string out = "P5\n" + std::to_string(grid.cols) + " " + std::to_string(grid.rows) +
                    "\n255\n";
  for (std::uint8_t v : grid.data) out.push_back(static_cast<char>(v ? on : 0));
  return out;
}

void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& grid) {
  write_bytes(path, encode_pgm(grid));
}

std::string encode_pgm(const Grid<double>& grid) {
  std::string out = "P5\n" + std::to_string(grid.cols) + " " + std::to_string(grid.rows) +
                    "\n255\n";
  for (double v : grid.data) {
    out.push_back(static_cast<char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Grid<double>& grid) {
  write_bytes(path, encode_pgm(grid));
}

}  // namespace lanestruct
