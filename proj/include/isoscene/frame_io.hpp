#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "isoscene/error.hpp"
#include "isoscene/fixture.hpp"
#include "isoscene/gltf.hpp"
#include "isoscene/png_io.hpp"
#include "isoscene/scene.hpp"
#include "isoscene/sketch.hpp"
#include "isoscene/understanding.hpp"

namespace isoscene {

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

// Depth on disk: 16-bit, 0 = no surface, 1..65535 linear over [min, max].
inline Raster<std::uint16_t> encode_depth(const DepthMap& depth, double& lo, double& hi) {
  lo = 1e300;
  hi = -1e300;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      lo = std::min(lo, depth.values.at(x, y));
      hi = std::max(hi, depth.values.at(x, y));
    }
  }
  if (lo > hi) lo = hi = 0.0;
  const double span = hi > lo ? hi - lo : 1.0;
  Raster<std::uint16_t> img(depth.width(), depth.height(), 1, 0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      img.at(x, y) = static_cast<std::uint16_t>(1 + std::lround((depth.values.at(x, y) - lo) / span * 65534.0));
    }
  }
  return img;
}

inline DepthMap decode_depth(const Raster<std::uint16_t>& img, double lo, double hi) {
  DepthMap d(img.width(), img.height());
  const double span = hi > lo ? hi - lo : 1.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = img.at(x, y);
      if (v == 0) continue;
      d.values.at(x, y) = lo + (v - 1) / 65534.0 * span;
      d.valid.at(x, y) = 1;
    }
  }
  return d;
}

// frame.json, color.png, depth.png, semantic.png, instances/instance_<id>.png
// and instances.json.
inline void write_frame(const std::filesystem::path& dir, const IsometricFrame& frame) {
  if (!std::filesystem::is_directory(dir)) throw IoError("output directory '" + dir.string() + "' does not exist");
  write_png8(dir / "color.png", quantize_color(frame.color));
  double lo = 0.0, hi = 0.0;
  write_png16(dir / "depth.png", encode_depth(frame.depth, lo, hi));
  Raster<std::uint8_t> sem(frame.width(), frame.height(), 1, 0);
  for (std::size_t i = 0; i < sem.size(); ++i) sem[i] = static_cast<std::uint8_t>(frame.semantic[i]);
  write_png8(dir / "semantic.png", sem);
  std::filesystem::create_directories(dir / "instances");
  Json instances = Json::array();
  for (const auto& inst : frame.instances) {
    const std::string file = "instances/instance_" + std::to_string(inst.id) + ".png";
    Mask m = inst.mask;
    for (auto& v : m.storage()) v = v ? 255 : 0;
    write_png8(dir / file, m);
    instances.push_back({{"id", inst.id}, {"category", category_name(inst.category)}, {"file", file}});
  }
  write_text(dir / "instances.json", dump_json(instances));
  const Json manifest{{"camera", camera_to_json(frame.camera)},
                      {"color", "color.png"},
                      {"depth", {{"file", "depth.png"}, {"min", lo}, {"max", hi}}},
                      {"semantic", "semantic.png"},
                      {"instances", "instances.json"}};
  write_text(dir / "frame.json", dump_json(manifest));
}

// Accepts the frame directory or its frame.json.
inline IsometricFrame read_frame(const std::filesystem::path& where) {
  const auto manifest_path = std::filesystem::is_directory(where) ? where / "frame.json" : where;
  const auto dir = manifest_path.parent_path();
  const Json m = read_json_file(manifest_path);
  IsometricFrame f;
  try {
    f.camera = camera_from_json(m.at("camera"));
    f.color = dequantize_color(read_png8(dir / m.at("color").get<std::string>(), 3));
    const auto& dj = m.at("depth");
    f.depth = decode_depth(read_png16(dir / dj.at("file").get<std::string>()), dj.at("min").get<double>(),
                           dj.at("max").get<double>());
    const auto sem = read_png8(dir / m.at("semantic").get<std::string>(), 1);
    f.semantic = LabelGrid(sem.width(), sem.height(), 1, 0);
    for (std::size_t i = 0; i < sem.size(); ++i) f.semantic[i] = sem[i];
    const Json instances = read_json_file(dir / m.at("instances").get<std::string>());
    for (const auto& e : instances) {
      InstanceMask inst;
      inst.id = e.at("id").get<int>();
      inst.category = category_from_json(e.at("category"));
      inst.mask = read_png8(dir / e.at("file").get<std::string>(), 1);
      for (auto& v : inst.mask.storage()) v = v >= 128 ? 1 : 0;
      f.instances.push_back(std::move(inst));
    }
  } catch (const Json::exception& e) {
    throw ParseError("frame manifest '" + manifest_path.string() + "': " + e.what());
  }
  if (!f.depth.values.same_extent(f.color) || !f.semantic.same_extent(f.color)) {
    throw ParseError("frame '" + manifest_path.string() + "': rasters differ in size");
  }
  for (const auto& inst : f.instances) {
    if (!inst.mask.same_extent(f.color)) throw ParseError("frame: instance mask size differs from the frame");
  }
  if (f.camera.image_width != f.width() || f.camera.image_height != f.height()) {
    throw ParseError("frame: camera image size does not match the rasters");
  }
  return f;
}

// Fixture extras next to the frame: truth scene, BEV renders and a sketch of
// the water, road and building layout.
inline void write_fixture_extras(const std::filesystem::path& dir, const SceneDescriptor& truth, const BevRender& bev,
                                 const IsometricFrame& frame) {
  write_text(dir / "scene_truth.json", dump_json(scene_to_json(truth)));
  write_png8(dir / "bev_color.png", quantize_color(bev.color));
  double lo = 0.0, hi = 0.0;
  write_png16(dir / "bev_height.png", quantize_heightmap(truth.terrain, lo, hi));
  write_text(dir / "bev.json", dump_json({{"min_elevation", lo}, {"max_elevation", hi}}));
  std::filesystem::create_directories(dir / "sketch");
  write_sketch(dir / "sketch",
               sketch_from_semantic(frame.semantic, {Category::kWater, Category::kRoad, Category::kBuilding}));
}

// Understanding outputs: heightmap.png + heightmap.json, splat_<k>.png +
// splat.json, placements.json, water.json, basemap_color.png,
// diagnostics.json and the compiled scene.json.
inline void write_understanding(const std::filesystem::path& dir, const UnderstandingResult& r,
                                const SceneDescriptor& scene) {
  if (!std::filesystem::is_directory(dir)) throw IoError("output directory '" + dir.string() + "' does not exist");
  double lo = 0.0, hi = 0.0;
  write_png16(dir / "heightmap.png", quantize_heightmap(r.heightmap, lo, hi));
  write_text(dir / "heightmap.json", dump_json({{"datum", r.heightmap.datum},
                                                {"cell_size", r.heightmap.cell_size},
                                                {"origin", {r.heightmap.origin_x, r.heightmap.origin_y}},
                                                {"min_elevation", lo},
                                                {"max_elevation", hi},
                                                {"d_max", r.extraction.d_max}}));
  Json channels = Json::array();
  for (int k = 0; k < r.splat.channel_count(); ++k) {
    Raster<std::uint8_t> img(r.splat.width(), r.splat.height(), 1, 0);
    for (int j = 0; j < r.splat.height(); ++j) {
      for (int i = 0; i < r.splat.width(); ++i) img.at(i, j) = to_byte(r.splat.weights.at(i, j, k));
    }
    const std::string file = "splat_" + std::to_string(k) + ".png";
    write_png8(dir / file, img);
    channels.push_back({{"file", file}, {"category", category_name(r.splat.channel_categories[static_cast<std::size_t>(k)])}});
  }
  write_text(dir / "splat.json", dump_json({{"channels", channels}}));
  Json placements = Json::array();
  for (const auto& p : r.placements.placements) placements.push_back(placement_to_json(p));
  write_text(dir / "placements.json", dump_json(placements));
  Json water = Json::array();
  for (const auto& w : r.water_regions) water.push_back(water_region_to_json(w));
  write_text(dir / "water.json", dump_json(water));
  write_png8(dir / "basemap_color.png", quantize_color(r.completed.color));
  Json failures = Json::array();
  for (const auto& d : r.placements.diagnostics) failures.push_back({{"instance_id", d.instance_id}, {"message", d.message}});
  write_text(dir / "diagnostics.json",
             dump_json({{"placements", r.placements.placements.size()},
                        {"instance_failures", failures},
                        {"water_regions", r.water_regions.size()},
                        {"observed_vertices", count_set(r.extraction.observed)},
                        {"grid", {r.heightmap.width(), r.heightmap.height()}}}));
  write_text(dir / "scene.json", dump_json(scene_to_json(scene)));
}

}  // namespace isoscene
