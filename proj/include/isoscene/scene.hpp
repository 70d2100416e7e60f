#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "isoscene/error.hpp"
#include "isoscene/iso_camera.hpp"
#include "isoscene/raster.hpp"

namespace isoscene {

using Json = nlohmann::json;

// Semantic label ids shared by the renderer, the sketch encoder and the
// understanding stage. 0 marks pixels that hit nothing.
enum class Category : std::int32_t {
  kVoid = 0,
  kGrass = 1,
  kRock = 2,
  kSand = 3,
  kRoad = 4,
  kWater = 5,
  kBuilding = 6,
  kBridge = 7,
  kTree = 8,
};

inline constexpr int kCategoryCount = 9;

struct CategoryInfo {
  Category id;
  const char* name;
  std::array<std::uint8_t, 3> color;
  bool foreground;
};

// Flat palette. Sketch color code: blue water, yellow building, orange bridge,
// gray road, green tree.
inline const std::array<CategoryInfo, kCategoryCount>& category_table() {
  static const std::array<CategoryInfo, kCategoryCount> table{{
      {Category::kVoid, "void", {0, 0, 0}, false},
      {Category::kGrass, "grass", {118, 178, 84}, false},
      {Category::kRock, "rock", {122, 104, 92}, false},
      {Category::kSand, "sand", {214, 194, 136}, false},
      {Category::kRoad, "road", {128, 128, 128}, false},
      {Category::kWater, "water", {40, 92, 204}, false},
      {Category::kBuilding, "building", {232, 200, 56}, true},
      {Category::kBridge, "bridge", {234, 132, 38}, true},
      {Category::kTree, "tree", {28, 122, 44}, true},
  }};
  return table;
}

inline const CategoryInfo& category_info(Category c) {
  const auto i = static_cast<std::size_t>(c);
  if (i >= kCategoryCount) throw Error("unknown category id " + std::to_string(i));
  return category_table()[i];
}

inline const char* category_name(Category c) { return category_info(c).name; }

inline std::optional<Category> category_from_name(const std::string& name) {
  for (const auto& info : category_table()) {
    if (name == info.name) return info.id;
  }
  return std::nullopt;
}

inline std::array<double, 3> category_color(Category c) {
  const auto& rgb = category_info(c).color;
  return {rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0};
}

// Ground texture categories, in splat channel order.
inline const std::vector<Category>& terrain_categories() {
  static const std::vector<Category> cats{Category::kGrass, Category::kRock, Category::kSand,
                                          Category::kRoad, Category::kWater};
  return cats;
}

// Elevation grid sampled at vertices: vertex (i, j) sits at world
// (origin_x + i * cell_size, origin_y + j * cell_size). Absolute elevation is
// datum + value. Between vertices the surface is piecewise linear over two
// triangles per cell split along the (i, j)-(i+1, j+1) diagonal, which is the
// same triangulation the terrain mesh uses.
struct Heightmap {
  RealGrid values;
  double cell_size = 1.0;
  double datum = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  Heightmap() = default;
  Heightmap(int width, int height, double cell, double ox, double oy, double fill = 0.0)
      : values(width, height, 1, fill), cell_size(cell), origin_x(ox), origin_y(oy) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  double extent_x() const { return (width() - 1) * cell_size; }
  double extent_y() const { return (height() - 1) * cell_size; }

  double elevation(int i, int j) const { return datum + values.at(i, j); }
  Vec2 vertex_position(int i, int j) const { return {origin_x + i * cell_size, origin_y + j * cell_size}; }

  bool contains(Vec2 p, double tol = 1e-9) const {
    return p.x >= origin_x - tol && p.y >= origin_y - tol && p.x <= origin_x + extent_x() + tol &&
           p.y <= origin_y + extent_y() + tol;
  }

  // Nearest vertex, clamped into the grid.
  std::array<int, 2> nearest_vertex(Vec2 p) const {
    const int i = static_cast<int>(std::lround((p.x - origin_x) / cell_size));
    const int j = static_cast<int>(std::lround((p.y - origin_y) / cell_size));
    return {std::clamp(i, 0, width() - 1), std::clamp(j, 0, height() - 1)};
  }

  // Absolute elevation of the triangulated surface at p (clamped to the grid).
  double sample(Vec2 p) const {
    if (width() < 2 || height() < 2) {
      const auto v = nearest_vertex(p);
      return elevation(v[0], v[1]);
    }
    const double gx = std::clamp((p.x - origin_x) / cell_size, 0.0, static_cast<double>(width() - 1));
    const double gy = std::clamp((p.y - origin_y) / cell_size, 0.0, static_cast<double>(height() - 1));
    const int i = std::min(static_cast<int>(gx), width() - 2);
    const int j = std::min(static_cast<int>(gy), height() - 2);
    const double fx = gx - i;
    const double fy = gy - j;
    const double h00 = values.at(i, j), h10 = values.at(i + 1, j);
    const double h01 = values.at(i, j + 1), h11 = values.at(i + 1, j + 1);
    double h;
    if (fx >= fy) {
      h = h00 + fx * (h10 - h00) + fy * (h11 - h10);
    } else {
      h = h00 + fy * (h01 - h00) + fx * (h11 - h01);
    }
    return datum + h;
  }

  double min_elevation() const {
    return datum + *std::min_element(values.storage().begin(), values.storage().end());
  }
  double max_elevation() const {
    return datum + *std::max_element(values.storage().begin(), values.storage().end());
  }
};

// Per-vertex simplex weights over K ground texture categories, on the same
// vertex grid as the heightmap.
struct Splatmap {
  RealGrid weights;  // W x H x K
  std::vector<Category> channel_categories;

  int width() const { return weights.width(); }
  int height() const { return weights.height(); }
  int channel_count() const { return weights.channels(); }

  int dominant_channel(int x, int y) const {
    int best = 0;
    for (int k = 1; k < channel_count(); ++k) {
      if (weights.at(x, y, k) > weights.at(x, y, best)) best = k;
    }
    return best;
  }
  Category dominant_category(int x, int y) const { return channel_categories[dominant_channel(x, y)]; }
};

// Ground-plane rectangle [min_x, max_x] x [min_y, max_y]. In the notation of
// the footprint construction, (max_x, max_y) is (x1, y1) and (min_x, min_y)
// is (x2, y2).
struct Footprint {
  double min_x = 0.0;
  double max_x = 0.0;
  double min_y = 0.0;
  double max_y = 0.0;
  double yaw = 0.0;

  double width() const { return max_x - min_x; }
  double depth() const { return max_y - min_y; }
  double area() const { return width() * depth(); }
  Vec2 center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
  bool valid() const { return min_x < max_x && min_y < max_y; }
  Footprint translated(double dx, double dy) const {
    return {min_x + dx, max_x + dx, min_y + dy, max_y + dy, yaw};
  }
};

inline double footprint_iou(const Footprint& a, const Footprint& b) {
  const double ix = std::max(0.0, std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x));
  const double iy = std::max(0.0, std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct ObjectPlacement {
  int instance_id = 0;
  Category category = Category::kBuilding;
  Footprint footprint;
  double height = 0.0;
  double base_elevation = 0.0;
  std::string asset_ref;
};

struct WaterRegion {
  std::vector<Vec2> polygon;
  double water_level = 0.0;
};

// Even-odd point-in-polygon test.
inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

// Heightmap vertices covered by a polygon.
inline Mask rasterize_polygon(const std::vector<Vec2>& poly, const Heightmap& grid) {
  Mask m(grid.width(), grid.height(), 1, 0);
  for (int j = 0; j < grid.height(); ++j) {
    for (int i = 0; i < grid.width(); ++i) {
      if (point_in_polygon(grid.vertex_position(i, j), poly)) m.at(i, j) = 1;
    }
  }
  return m;
}

struct SceneDescriptor {
  Heightmap terrain;
  std::vector<WaterRegion> water_regions;
  std::vector<ObjectPlacement> objects;
  Splatmap splat;
  std::map<std::string, std::string> texture_assignments;  // category -> tile id
  std::uint64_t rng_seed = 0;
  std::optional<IsometricCamera> camera;
};

// ---------------------------------------------------------------------------
// JSON

inline Json camera_to_json(const IsometricCamera& c) {
  return Json{{"pixels_per_world_unit", c.pixels_per_world_unit},
              {"image_width", c.image_width},
              {"image_height", c.image_height},
              {"principal_point", {c.principal_point.x, c.principal_point.y}},
              {"depth_offset", c.depth_offset}};
}

inline IsometricCamera camera_from_json(const Json& j) {
  IsometricCamera c;
  c.pixels_per_world_unit = j.at("pixels_per_world_unit").get<double>();
  c.image_width = j.at("image_width").get<int>();
  c.image_height = j.at("image_height").get<int>();
  c.principal_point = {j.at("principal_point").at(0).get<double>(), j.at("principal_point").at(1).get<double>()};
  c.depth_offset = j.value("depth_offset", c.depth_offset);
  c.validate();
  return c;
}

inline Json heightmap_to_json(const Heightmap& h) {
  return Json{{"width", h.width()},       {"height", h.height()},     {"cell_size", h.cell_size},
              {"datum", h.datum},         {"origin", {h.origin_x, h.origin_y}},
              {"values", h.values.storage()}};
}

inline Heightmap heightmap_from_json(const Json& j) {
  Heightmap h(j.at("width").get<int>(), j.at("height").get<int>(), j.at("cell_size").get<double>(),
              j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>());
  h.datum = j.at("datum").get<double>();
  auto vals = j.at("values").get<std::vector<double>>();
  if (vals.size() != h.values.size()) throw ParseError("heightmap: value count mismatch");
  h.values.storage() = std::move(vals);
  return h;
}

inline Json footprint_to_json(const Footprint& f) {
  return Json{{"min_x", f.min_x}, {"max_x", f.max_x}, {"min_y", f.min_y}, {"max_y", f.max_y}, {"yaw", f.yaw}};
}

inline Footprint footprint_from_json(const Json& j) {
  return {j.at("min_x").get<double>(), j.at("max_x").get<double>(), j.at("min_y").get<double>(),
          j.at("max_y").get<double>(), j.value("yaw", 0.0)};
}

inline Category category_from_json(const Json& j) {
  const auto name = j.get<std::string>();
  const auto c = category_from_name(name);
  if (!c) throw ParseError("unknown category '" + name + "'");
  return *c;
}

inline Json placement_to_json(const ObjectPlacement& p) {
  return Json{{"instance_id", p.instance_id},
              {"category", category_name(p.category)},
              {"footprint", footprint_to_json(p.footprint)},
              {"height", p.height},
              {"base_elevation", p.base_elevation},
              {"asset_ref", p.asset_ref}};
}

inline ObjectPlacement placement_from_json(const Json& j) {
  ObjectPlacement p;
  p.instance_id = j.at("instance_id").get<int>();
  p.category = category_from_json(j.at("category"));
  p.footprint = footprint_from_json(j.at("footprint"));
  p.height = j.at("height").get<double>();
  p.base_elevation = j.at("base_elevation").get<double>();
  p.asset_ref = j.value("asset_ref", std::string{});
  return p;
}

inline Json splatmap_to_json(const Splatmap& s) {
  Json cats = Json::array();
  for (auto c : s.channel_categories) cats.push_back(category_name(c));
  return Json{{"width", s.width()}, {"height", s.height()}, {"channels", cats}, {"weights", s.weights.storage()}};
}

inline Splatmap splatmap_from_json(const Json& j) {
  Splatmap s;
  for (const auto& c : j.at("channels")) s.channel_categories.push_back(category_from_json(c));
  s.weights = RealGrid(j.at("width").get<int>(), j.at("height").get<int>(),
                       static_cast<int>(s.channel_categories.size()), 0.0);
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != s.weights.size()) throw ParseError("splatmap: weight count mismatch");
  s.weights.storage() = std::move(w);
  return s;
}

inline Json water_region_to_json(const WaterRegion& r) {
  Json poly = Json::array();
  for (const auto& p : r.polygon) poly.push_back({p.x, p.y});
  return Json{{"polygon", poly}, {"water_level", r.water_level}};
}

inline WaterRegion water_region_from_json(const Json& j) {
  WaterRegion r;
  for (const auto& p : j.at("polygon")) r.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  r.water_level = j.at("water_level").get<double>();
  return r;
}

inline Json scene_to_json(const SceneDescriptor& s) {
  Json j;
  j["terrain"] = heightmap_to_json(s.terrain);
  j["water_regions"] = Json::array();
  for (const auto& r : s.water_regions) j["water_regions"].push_back(water_region_to_json(r));
  j["objects"] = Json::array();
  for (const auto& o : s.objects) j["objects"].push_back(placement_to_json(o));
  j["splat"] = splatmap_to_json(s.splat);
  j["texture_assignments"] = s.texture_assignments;
  j["rng_seed"] = s.rng_seed;
  if (s.camera) j["camera"] = camera_to_json(*s.camera);
  return j;
}

inline SceneDescriptor scene_from_json(const Json& j) {
  try {
    SceneDescriptor s;
    s.terrain = heightmap_from_json(j.at("terrain"));
    for (const auto& r : j.at("water_regions")) s.water_regions.push_back(water_region_from_json(r));
    for (const auto& o : j.at("objects")) s.objects.push_back(placement_from_json(o));
    s.splat = splatmap_from_json(j.at("splat"));
    s.texture_assignments = j.value("texture_assignments", std::map<std::string, std::string>{});
    s.rng_seed = j.value("rng_seed", std::uint64_t{0});
    if (j.contains("camera")) s.camera = camera_from_json(j.at("camera"));
    return s;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scene descriptor: ") + e.what());
  }
}

// Pretty-printed, key-sorted JSON text; identical inputs give identical bytes.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace isoscene
