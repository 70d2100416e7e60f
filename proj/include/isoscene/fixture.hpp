#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/iso_camera.hpp"
#include "isoscene/raster.hpp"
#include "isoscene/scene.hpp"

namespace isoscene {

struct InstanceMask {
  int id = 0;
  Category category = Category::kBuilding;
  Mask mask;
};

// Aligned rasters seen from one isometric viewpoint.
struct IsometricFrame {
  RealGrid color;  // H x W x 3 in [0,1]
  DepthMap depth;
  LabelGrid semantic;
  std::vector<InstanceMask> instances;
  IsometricCamera camera;

  int width() const { return color.width(); }
  int height() const { return color.height(); }
};

struct FixtureConfig {
  int grid_size = 64;  // terrain vertices per side
  double cell_size = 1.0;
  int object_count = -1;  // < 0: draw uniformly from [min_objects, max_objects]
  int min_objects = 1;
  int max_objects = 5;
  int bump_count = 5;
  double bump_amplitude_min = 0.5;
  double bump_amplitude_max = 3.0;
  double bump_radius_min = 10.0;
  double bump_radius_max = 20.0;
  double base_height = 0.0;
  double water_probability = 0.5;
  double water_bed_offset = 0.5;
  double bank_slope = 0.3;
  double object_size_min = 3.0;
  double object_size_max = 8.0;
  double object_height_min = 2.0;
  double object_height_max = 8.0;
  // Terrain vertices at or above this fraction of the height range become rock.
  double rock_fraction = 0.75;
  bool road = true;
};

namespace fixture_detail {

struct Bump {
  double cx, cy, radius, amplitude;
};

inline double bump_height(const Bump& b, double x, double y) {
  const double r = std::hypot(x - b.cx, y - b.cy);
  if (r >= b.radius) return 0.0;
  return b.amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * r / b.radius));
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Explicit conversion keeps the stream identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Image-space extent of a box in camera-independent units: u = X - Y spans the
// image horizontally and v = X + Y - 2Z vertically.
struct ScreenBox {
  double u0, u1, v0, v1;
};

inline ScreenBox screen_box(const Footprint& f, double z0, double z1) {
  return {f.min_x - f.max_y, f.max_x - f.min_y, f.min_x + f.min_y - 2.0 * z1, f.max_x + f.max_y - 2.0 * z0};
}

inline bool screen_overlap(const ScreenBox& a, const ScreenBox& b, double margin) {
  return !(a.u1 + margin < b.u0 || b.u1 + margin < a.u0 || a.v1 + margin < b.v0 || b.v1 + margin < a.v0);
}

inline bool rect_overlap(const Footprint& a, const Footprint& b, double margin) {
  return !(a.max_x + margin < b.min_x || b.max_x + margin < a.min_x || a.max_y + margin < b.min_y ||
           b.max_y + margin < a.min_y);
}

}  // namespace fixture_detail

inline Mask region_boundary_ring(const Mask& region) {
  Mask ring(region.width(), region.height(), 1, 0);
  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (region.at(x, y)) continue;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (region.contains(nx[k], ny[k]) && region.at(nx[k], ny[k])) {
          ring.at(x, y) = 1;
          break;
        }
      }
    }
  }
  return ring;
}

// Deterministic random scene: cosine-bump terrain, an optional water basin,
// a road strip, and axis-aligned box objects standing on flattened pads.
inline SceneDescriptor generate_random_scene(std::uint64_t seed, const FixtureConfig& cfg) {
  using namespace fixture_detail;
  if (cfg.grid_size <= 0 || !(cfg.cell_size > 0.0)) throw Error("empty scene domain");
  if (cfg.grid_size < 16) throw Error("fixture: terrain must have at least 16x16 cells");
  std::mt19937_64 rng(seed);

  const int n = cfg.grid_size;
  const double extent = (n - 1) * cfg.cell_size;
  SceneDescriptor scene;
  scene.rng_seed = seed;
  scene.terrain = Heightmap(n, n, cfg.cell_size, -0.5 * extent, -0.5 * extent, cfg.base_height);
  Heightmap& terrain = scene.terrain;

  std::vector<Bump> bumps;
  for (int k = 0; k < cfg.bump_count; ++k) {
    Bump b;
    b.cx = uniform(rng, terrain.origin_x, terrain.origin_x + extent);
    b.cy = uniform(rng, terrain.origin_y, terrain.origin_y + extent);
    b.radius = uniform(rng, cfg.bump_radius_min, cfg.bump_radius_max);
    b.amplitude = uniform(rng, cfg.bump_amplitude_min, cfg.bump_amplitude_max);
    bumps.push_back(b);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 p = terrain.vertex_position(i, j);
      double h = cfg.base_height;
      for (const auto& b : bumps) h += bump_height(b, p.x, p.y);
      terrain.values.at(i, j) = h;
    }
  }

  // Water basin: flat bed at (lowest boundary height - bed offset).
  Mask water(n, n, 1, 0);
  Footprint water_rect{};
  const bool has_water = uniform(rng, 0.0, 1.0) < cfg.water_probability;
  if (has_water) {
    const double w = uniform(rng, 8.0, 16.0) * cfg.cell_size;
    const double d = uniform(rng, 8.0, 16.0) * cfg.cell_size;
    const double margin = 3.0 * cfg.cell_size;
    const double x0 = uniform(rng, terrain.origin_x + margin, terrain.origin_x + extent - margin - w);
    const double y0 = uniform(rng, terrain.origin_y + margin, terrain.origin_y + extent - margin - d);
    water_rect = {x0, x0 + w, y0, y0 + d, 0.0};
    WaterRegion region;
    region.polygon = {{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + d}, {x0, y0 + d}};
    water = rasterize_polygon(region.polygon, terrain);
    if (count_set(water) > 0) {
      const Mask ring = region_boundary_ring(water);
      double level = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ring.size(); ++i) {
        if (ring[i]) level = std::min(level, terrain.values[i]);
      }
      for (std::size_t i = 0; i < water.size(); ++i) {
        if (water[i]) terrain.values[i] = level - cfg.water_bed_offset;
      }
      // Gentle banks: ground near the basin may rise at most bank_slope per
      // cell of distance, so the shore never hides the water surface. The
      // lowest ring vertex is untouched, so the level is unchanged.
      const int reach = 4;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          if (water.at(i, j)) continue;
          int dist = reach + 1;
          for (int dj = -reach; dj <= reach; ++dj) {
            for (int di = -reach; di <= reach; ++di) {
              if (water.contains(i + di, j + dj) && water.at(i + di, j + dj)) {
                dist = std::min(dist, std::max(std::abs(di), std::abs(dj)));
              }
            }
          }
          if (dist <= reach) {
            terrain.values.at(i, j) = std::min(terrain.values.at(i, j), level + cfg.bank_slope * dist);
          }
        }
      }
      region.water_level = level;
      scene.water_regions.push_back(region);
    }
  }

  // Road strip along X or Y.
  Footprint road{};
  const bool has_road = cfg.road;
  const bool road_along_x = uniform(rng, 0.0, 1.0) < 0.5;
  if (has_road) {
    const double width = 3.0 * cfg.cell_size;
    const double offset = uniform(rng, -0.35 * extent, 0.35 * extent);
    if (road_along_x) {
      road = {terrain.origin_x, terrain.origin_x + extent, offset - 0.5 * width, offset + 0.5 * width, 0.0};
    } else {
      road = {offset - 0.5 * width, offset + 0.5 * width, terrain.origin_y, terrain.origin_y + extent, 0.0};
    }
  }

  // Objects.
  int want = cfg.object_count;
  if (want < 0) want = uniform_int(rng, cfg.min_objects, cfg.max_objects);
  std::vector<ScreenBox> placed_screen;
  const double border = 4.0 * cfg.cell_size;
  for (int attempt = 0; attempt < 400 && static_cast<int>(scene.objects.size()) < want; ++attempt) {
    const double w = uniform(rng, cfg.object_size_min, cfg.object_size_max);
    const double d = uniform(rng, cfg.object_size_min, cfg.object_size_max);
    const double h = uniform(rng, cfg.object_height_min, cfg.object_height_max);
    const double r = uniform(rng, 0.0, 1.0);
    const Category cat = r < 0.7 ? Category::kBuilding : (r < 0.9 ? Category::kTree : Category::kBridge);
    // The ground an object hides lies behind it, toward -X and -Y, up to about
    // its height away; keep that strip on the terrain.
    const double back = border + h;
    if (extent - back - border - w <= 0.0 || extent - back - border - d <= 0.0) continue;
    const double x0 = uniform(rng, terrain.origin_x + back, terrain.origin_x + extent - border - w);
    const double y0 = uniform(rng, terrain.origin_y + back, terrain.origin_y + extent - border - d);
    Footprint fp{x0, x0 + w, y0, y0 + d, 0.0};
    if (has_water && rect_overlap(fp, water_rect, 4.0 * cfg.cell_size)) continue;
    bool clash = false;
    for (const auto& o : scene.objects) {
      if (rect_overlap(fp, o.footprint, 3.0 * cfg.cell_size)) clash = true;
    }
    // Pad sits at the highest ground it covers so no terrain in front can
    // rise above the object's base.
    double z0 = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec2 p = terrain.vertex_position(i, j);
        if (p.x >= fp.min_x - cfg.cell_size && p.x <= fp.max_x + cfg.cell_size && p.y >= fp.min_y - cfg.cell_size &&
            p.y <= fp.max_y + cfg.cell_size) {
          z0 = std::max(z0, terrain.elevation(i, j));
        }
      }
    }
    const ScreenBox sb = screen_box(fp, z0, z0 + h);
    for (const auto& other : placed_screen) {
      if (screen_overlap(sb, other, 3.0)) clash = true;
    }
    if (clash) continue;
    ObjectPlacement obj;
    obj.instance_id = static_cast<int>(scene.objects.size()) + 1;
    obj.category = cat;
    obj.footprint = fp;
    obj.height = h;
    obj.base_elevation = z0;
    obj.asset_ref = std::string("proxy:") + category_name(cat);
    scene.objects.push_back(obj);
    placed_screen.push_back(sb);
  }

  // Flatten a pad under every object so it rests on level ground.
  for (const auto& o : scene.objects) {
    const auto& f = o.footprint;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec2 p = terrain.vertex_position(i, j);
        if (p.x >= f.min_x - cfg.cell_size && p.x <= f.max_x + cfg.cell_size && p.y >= f.min_y - cfg.cell_size &&
            p.y <= f.max_y + cfg.cell_size) {
          terrain.values.at(i, j) = o.base_elevation - terrain.datum;
        }
      }
    }
  }

  // Ground categories, one-hot.
  const auto& cats = terrain_categories();
  const double lo = terrain.min_elevation();
  const double hi = terrain.max_elevation();
  const double rock_level = lo + cfg.rock_fraction * (hi - lo);
  Mask near_water(n, n, 1, 0);
  if (has_water) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        for (int dj = -2; dj <= 2 && !near_water.at(i, j); ++dj) {
          for (int di = -2; di <= 2; ++di) {
            if (water.contains(i + di, j + dj) && water.at(i + di, j + dj)) {
              near_water.at(i, j) = 1;
              break;
            }
          }
        }
      }
    }
  }
  scene.splat.channel_categories = cats;
  scene.splat.weights = RealGrid(n, n, static_cast<int>(cats.size()), 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Vec2 p = terrain.vertex_position(i, j);
      Category c = Category::kGrass;
      if (water.at(i, j)) {
        c = Category::kWater;
      } else if (has_road && p.x >= road.min_x && p.x <= road.max_x && p.y >= road.min_y && p.y <= road.max_y) {
        c = Category::kRoad;
      } else if (near_water.at(i, j)) {
        c = Category::kSand;
      } else if (hi > lo && terrain.elevation(i, j) >= rock_level) {
        c = Category::kRock;
      }
      const auto k = std::find(cats.begin(), cats.end(), c) - cats.begin();
      scene.splat.weights.at(i, j, static_cast<int>(k)) = 1.0;
    }
  }

  for (auto c : cats) {
    scene.texture_assignments[category_name(c)] =
        std::string(category_name(c)) + "_" + std::to_string(uniform_int(rng, 0, 2));
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Rendering

namespace render_detail {

enum class SurfaceKind : std::uint8_t { kNone, kTerrain, kWater, kObject };

struct Triangle {
  std::array<Vec3, 3> v;
  SurfaceKind kind;
  int object_index;  // into scene.objects, or -1
};

inline void push_quad(std::vector<Triangle>& out, Vec3 a, Vec3 b, Vec3 c, Vec3 d, SurfaceKind kind, int obj) {
  out.push_back({{a, b, c}, kind, obj});
  out.push_back({{a, c, d}, kind, obj});
}

inline void box_triangles(std::vector<Triangle>& out, const ObjectPlacement& o, int index) {
  const auto& f = o.footprint;
  const double z0 = o.base_elevation, z1 = o.base_elevation + o.height;
  const Vec3 p000{f.min_x, f.min_y, z0}, p100{f.max_x, f.min_y, z0}, p110{f.max_x, f.max_y, z0},
      p010{f.min_x, f.max_y, z0};
  const Vec3 p001{f.min_x, f.min_y, z1}, p101{f.max_x, f.min_y, z1}, p111{f.max_x, f.max_y, z1},
      p011{f.min_x, f.max_y, z1};
  const auto k = SurfaceKind::kObject;
  push_quad(out, p001, p101, p111, p011, k, index);  // top
  push_quad(out, p100, p110, p111, p101, k, index);  // +X
  push_quad(out, p010, p011, p111, p110, k, index);  // +Y
  push_quad(out, p000, p001, p011, p010, k, index);  // -X
  push_quad(out, p000, p100, p101, p001, k, index);  // -Y
  push_quad(out, p000, p010, p110, p100, k, index);  // bottom
}

inline Vec3 terrain_vertex(const Heightmap& h, int i, int j) {
  const Vec2 p = h.vertex_position(i, j);
  return {p.x, p.y, h.elevation(i, j)};
}

inline std::vector<Triangle> scene_triangles(const SceneDescriptor& scene) {
  std::vector<Triangle> tris;
  const Heightmap& h = scene.terrain;
  for (int j = 0; j + 1 < h.height(); ++j) {
    for (int i = 0; i + 1 < h.width(); ++i) {
      const Vec3 a = terrain_vertex(h, i, j), b = terrain_vertex(h, i + 1, j);
      const Vec3 c = terrain_vertex(h, i + 1, j + 1), d = terrain_vertex(h, i, j + 1);
      tris.push_back({{a, b, c}, SurfaceKind::kTerrain, -1});
      tris.push_back({{a, c, d}, SurfaceKind::kTerrain, -1});
    }
  }
  for (const auto& region : scene.water_regions) {
    const Mask cells = rasterize_polygon(region.polygon, h);
    const double half = 0.5 * h.cell_size;
    for (int j = 0; j < h.height(); ++j) {
      for (int i = 0; i < h.width(); ++i) {
        if (!cells.at(i, j)) continue;
        const Vec2 p = h.vertex_position(i, j);
        const double z = region.water_level;
        push_quad(tris, {p.x - half, p.y - half, z}, {p.x + half, p.y - half, z}, {p.x + half, p.y + half, z},
                  {p.x - half, p.y + half, z}, SurfaceKind::kWater, -1);
      }
    }
  }
  for (std::size_t k = 0; k < scene.objects.size(); ++k) box_triangles(tris, scene.objects[k], static_cast<int>(k));
  return tris;
}

inline double edge(Vec2 a, Vec2 b, Vec2 p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); }

}  // namespace render_detail

inline void validate_scene(const SceneDescriptor& scene) {
  const Heightmap& h = scene.terrain;
  if (h.width() < 2 || h.height() < 2) throw Error("scene: terrain must be at least 2x2");
  for (double v : h.values.storage()) {
    if (!std::isfinite(v)) throw Error("scene: non-finite terrain height");
  }
  if (scene.splat.width() != h.width() || scene.splat.height() != h.height() ||
      scene.splat.channel_count() != static_cast<int>(scene.splat.channel_categories.size())) {
    throw Error("scene: splatmap does not match terrain grid");
  }
  for (const auto& o : scene.objects) {
    if (!o.footprint.valid() || !(o.height >= 0.0)) throw Error("scene: invalid object placement");
    if (!h.contains({o.footprint.min_x, o.footprint.min_y}, 1e-6) ||
        !h.contains({o.footprint.max_x, o.footprint.max_y}, 1e-6)) {
      throw Error("scene: object footprint outside terrain bounds");
    }
  }
}

// Z-buffered orthographic rasterization sampled at pixel centers. Ties keep
// the surface drawn first (terrain, then water, then objects).
inline IsometricFrame render_isometric(const SceneDescriptor& scene, const IsometricCamera& cam) {
  using namespace render_detail;
  cam.validate();
  validate_scene(scene);
  const auto tris = scene_triangles(scene);
  for (const auto& t : tris) {
    for (const auto& v : t.v) {
      const Vec2 s = project(v, cam);
      if (s.x < 0.0 || s.y < 0.0 || s.x > cam.image_width || s.y > cam.image_height) {
        throw Error("scene not covered");
      }
    }
  }

  const int W = cam.image_width, H = cam.image_height;
  IsometricFrame frame;
  frame.camera = cam;
  frame.depth = DepthMap(W, H);
  frame.color = RealGrid(W, H, 3, 0.0);
  frame.semantic = LabelGrid(W, H, 1, 0);
  RealGrid zbuf(W, H, 1, std::numeric_limits<double>::infinity());
  Raster<std::int32_t> owner(W, H, 1, -1);

  for (std::size_t ti = 0; ti < tris.size(); ++ti) {
    const auto& t = tris[ti];
    const Vec2 s0 = project(t.v[0], cam), s1 = project(t.v[1], cam), s2 = project(t.v[2], cam);
    const double d0 = forward_depth(t.v[0], cam), d1 = forward_depth(t.v[1], cam), d2 = forward_depth(t.v[2], cam);
    const double area = edge(s0, s1, s2);
    if (std::abs(area) < 1e-12) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({s0.x, s1.x, s2.x}) - 0.5)));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({s0.x, s1.x, s2.x}) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({s0.y, s1.y, s2.y}) - 0.5)));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({s0.y, s1.y, s2.y}) - 0.5)));
    const double sign = area > 0.0 ? 1.0 : -1.0;
    const double abs_area = std::abs(area);
    const double eps = -1e-9 * abs_area;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p = pixel_center(x, y);
        const double w0 = sign * edge(s1, s2, p);
        const double w1 = sign * edge(s2, s0, p);
        const double w2 = sign * edge(s0, s1, p);
        if (w0 < eps || w1 < eps || w2 < eps) continue;
        const double depth = (w0 * d0 + w1 * d1 + w2 * d2) / abs_area;
        if (depth < zbuf.at(x, y)) {
          zbuf.at(x, y) = depth;
          owner.at(x, y) = static_cast<std::int32_t>(ti);
        }
      }
    }
  }

  for (const auto& o : scene.objects) {
    InstanceMask im;
    im.id = o.instance_id;
    im.category = o.category;
    im.mask = Mask(W, H, 1, 0);
    frame.instances.push_back(std::move(im));
  }

  const Heightmap& h = scene.terrain;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int ti = owner.at(x, y);
      if (ti < 0) continue;
      const auto& t = tris[static_cast<std::size_t>(ti)];
      const double depth = zbuf.at(x, y);
      frame.depth.values.at(x, y) = depth;
      frame.depth.valid.at(x, y) = 1;
      Category cat = Category::kGrass;
      if (t.kind == SurfaceKind::kObject) {
        cat = scene.objects[static_cast<std::size_t>(t.object_index)].category;
        frame.instances[static_cast<std::size_t>(t.object_index)].mask.at(x, y) = 1;
      } else if (t.kind == SurfaceKind::kWater) {
        cat = Category::kWater;
      } else {
        const Vec3 wp = unproject(pixel_center(x, y), depth, cam);
        const auto v = h.nearest_vertex({wp.x, wp.y});
        cat = scene.splat.dominant_category(v[0], v[1]);
      }
      frame.semantic.at(x, y) = static_cast<std::int32_t>(cat);
      const auto rgb = category_color(cat);
      for (int c = 0; c < 3; ++c) frame.color.at(x, y, c) = rgb[c];
    }
  }
  return frame;
}

struct BevRender {
  RealGrid color;   // W x H x 3 on the terrain vertex grid
  RealGrid height;  // absolute elevation, W x H
  LabelGrid semantic;
};

// Top-down view of the terrain alone; the height raster is the exact truth.
inline BevRender render_bev(const SceneDescriptor& scene) {
  validate_scene(scene);
  const Heightmap& h = scene.terrain;
  BevRender out;
  out.color = RealGrid(h.width(), h.height(), 3, 0.0);
  out.height = RealGrid(h.width(), h.height(), 1, 0.0);
  out.semantic = LabelGrid(h.width(), h.height(), 1, 0);
  for (int j = 0; j < h.height(); ++j) {
    for (int i = 0; i < h.width(); ++i) {
      out.height.at(i, j) = h.elevation(i, j);
      for (int k = 0; k < scene.splat.channel_count(); ++k) {
        const auto rgb = category_color(scene.splat.channel_categories[static_cast<std::size_t>(k)]);
        const double w = scene.splat.weights.at(i, j, k);
        for (int c = 0; c < 3; ++c) out.color.at(i, j, c) += w * rgb[c];
      }
      out.semantic.at(i, j) = static_cast<std::int32_t>(scene.splat.dominant_category(i, j));
    }
  }
  return out;
}

// Camera framing a fixture terrain: principal point at the image center and a
// scale leaving `margin` of the image free on each side.
inline IsometricCamera fit_camera(const SceneDescriptor& scene, int width, int height, double margin = 0.08) {
  IsometricCamera cam;
  cam.image_width = width;
  cam.image_height = height;
  double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
  auto visit = [&](Vec3 p) {
    const double u = dot(p, iso_axes::kRight);
    const double v = -dot(p, iso_axes::kUp);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  };
  const Heightmap& h = scene.terrain;
  for (int j = 0; j < h.height(); ++j) {
    for (int i = 0; i < h.width(); ++i) visit(render_detail::terrain_vertex(h, i, j));
  }
  for (const auto& o : scene.objects) {
    visit({o.footprint.min_x, o.footprint.min_y, o.base_elevation + o.height});
    visit({o.footprint.max_x, o.footprint.max_y, o.base_elevation + o.height});
  }
  const double avail_w = width * (1.0 - 2.0 * margin);
  const double avail_h = height * (1.0 - 2.0 * margin);
  cam.pixels_per_world_unit = std::min(avail_w / (umax - umin), avail_h / (vmax - vmin));
  const double s = cam.pixels_per_world_unit;
  cam.principal_point = {0.5 * width - s * 0.5 * (umin + umax), 0.5 * height - s * 0.5 * (vmin + vmax)};
  return cam;
}

}  // namespace isoscene
