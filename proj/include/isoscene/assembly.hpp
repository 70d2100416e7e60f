#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "isoscene/error.hpp"
#include "isoscene/iso_camera.hpp"
#include "isoscene/png_io.hpp"
#include "isoscene/random.hpp"
#include "isoscene/raster.hpp"
#include "isoscene/scene.hpp"

namespace isoscene {

// ---------------------------------------------------------------------------
// Terrain mesh

struct TerrainMesh {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<Vec2> uvs;
  std::vector<std::uint32_t> indices;
  int grid_width = 0;
  int grid_height = 0;

  std::size_t triangle_count() const { return indices.size() / 3; }
};

// Regular grid, two triangles per cell split along the (i, j)-(i+1, j+1)
// diagonal, counter-clockwise seen from +Z. Normals from central differences
// (one-sided on the border).
inline TerrainMesh terrain_mesh(const Heightmap& hm) {
  const int W = hm.width(), H = hm.height();
  if (W < 2 || H < 2) throw Error("terrain_mesh: heightmap must be at least 2x2");
  TerrainMesh m;
  m.grid_width = W;
  m.grid_height = H;
  m.positions.reserve(static_cast<std::size_t>(W) * H);
  const double c = hm.cell_size;
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      const Vec2 p = hm.vertex_position(i, j);
      m.positions.push_back({p.x, p.y, hm.elevation(i, j)});
      const int i0 = std::max(i - 1, 0), i1 = std::min(i + 1, W - 1);
      const int j0 = std::max(j - 1, 0), j1 = std::min(j + 1, H - 1);
      const double hx = (hm.values.at(i1, j) - hm.values.at(i0, j)) / ((i1 - i0) * c);
      const double hy = (hm.values.at(i, j1) - hm.values.at(i, j0)) / ((j1 - j0) * c);
      // Avoid negative zeros so a flat grid gives exactly (0, 0, 1).
      m.normals.push_back(normalized(Vec3{hx == 0.0 ? 0.0 : -hx, hy == 0.0 ? 0.0 : -hy, 1.0}));
      m.uvs.push_back({static_cast<double>(i) / (W - 1), static_cast<double>(j) / (H - 1)});
    }
  }
  for (int j = 0; j + 1 < H; ++j) {
    for (int i = 0; i + 1 < W; ++i) {
      const auto a = static_cast<std::uint32_t>(j * W + i);
      const auto b = a + 1;
      const auto d = static_cast<std::uint32_t>((j + 1) * W + i);
      const auto cc = d + 1;
      m.indices.insert(m.indices.end(), {a, b, cc, a, cc, d});
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Generic triangle mesh (object proxies, scatter markers, water)

struct Mesh {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> indices;
};

inline void append_quad(Mesh& m, Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
  const Vec3 n = normalized(cross(b - a, c - a));
  const auto base = static_cast<std::uint32_t>(m.positions.size());
  for (Vec3 p : {a, b, c, d}) {
    m.positions.push_back(p);
    m.normals.push_back(n);
  }
  m.indices.insert(m.indices.end(), {base, base + 1, base + 2, base, base + 2, base + 3});
}

// x, y in [-0.5, 0.5], z in [0, 1]: base centered on the origin.
inline Mesh unit_box() {
  Mesh m;
  const Vec3 p000{-0.5, -0.5, 0}, p100{0.5, -0.5, 0}, p110{0.5, 0.5, 0}, p010{-0.5, 0.5, 0};
  const Vec3 p001{-0.5, -0.5, 1}, p101{0.5, -0.5, 1}, p111{0.5, 0.5, 1}, p011{-0.5, 0.5, 1};
  append_quad(m, p001, p101, p111, p011);
  append_quad(m, p000, p010, p110, p100);
  append_quad(m, p100, p110, p111, p101);
  append_quad(m, p010, p011, p111, p110);
  append_quad(m, p000, p001, p011, p010);
  append_quad(m, p000, p100, p101, p001);
  return m;
}

// Four-sided pyramid on the unit base, used as the scatter marker.
inline Mesh unit_marker() {
  Mesh m;
  const Vec3 apex{0, 0, 1};
  const std::array<Vec3, 4> base{Vec3{-0.5, -0.5, 0}, Vec3{0.5, -0.5, 0}, Vec3{0.5, 0.5, 0}, Vec3{-0.5, 0.5, 0}};
  for (int k = 0; k < 4; ++k) {
    const Vec3 a = base[static_cast<std::size_t>(k)], b = base[static_cast<std::size_t>((k + 1) % 4)];
    const Vec3 n = normalized(cross(b - a, apex - a));
    const auto i0 = static_cast<std::uint32_t>(m.positions.size());
    for (Vec3 p : {a, b, apex}) {
      m.positions.push_back(p);
      m.normals.push_back(n);
    }
    m.indices.insert(m.indices.end(), {i0, i0 + 1, i0 + 2});
  }
  const auto i0 = static_cast<std::uint32_t>(m.positions.size());
  for (int k = 3; k >= 0; --k) {
    m.positions.push_back(base[static_cast<std::size_t>(k)]);
    m.normals.push_back({0, 0, -1});
  }
  m.indices.insert(m.indices.end(), {i0, i0 + 1, i0 + 2, i0, i0 + 2, i0 + 3});
  return m;
}

// Minimal Wavefront OBJ reader: `v` and `f` records, polygons fanned, flat
// normals. OBJ files are Y-up; the result is Z-up and fitted to the unit box
// frame (x, y in [-0.5, 0.5], z in [0, 1]).
inline Mesh load_obj_unit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh '" + path.string() + "'");
  std::vector<Vec3> verts;
  std::vector<std::array<std::uint32_t, 3>> tris;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      verts.push_back({x, -z, y});
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string tok;
      while (ls >> tok) {
        const long idx = std::stol(tok.substr(0, tok.find('/')));
        const long n = static_cast<long>(verts.size());
        const long resolved = idx < 0 ? n + idx : idx - 1;
        if (resolved < 0 || resolved >= n) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) + ": face index out of range");
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (verts.empty() || tris.empty()) throw ParseError("mesh '" + path.string() + "' has no faces");
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& v : verts) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  auto fit = [&](Vec3 v) {
    auto unit = [](double x, double a, double b) { return b > a ? (x - a) / (b - a) : 0.5; };
    return Vec3{unit(v.x, lo.x, hi.x) - 0.5, unit(v.y, lo.y, hi.y) - 0.5, unit(v.z, lo.z, hi.z)};
  };
  Mesh m;
  for (const auto& t : tris) {
    const Vec3 a = fit(verts[t[0]]), b = fit(verts[t[1]]), c = fit(verts[t[2]]);
    const Vec3 cr = cross(b - a, c - a);
    if (norm(cr) == 0.0) continue;
    const Vec3 n = normalized(cr);
    const auto base = static_cast<std::uint32_t>(m.positions.size());
    for (Vec3 p : {a, b, c}) {
      m.positions.push_back(p);
      m.normals.push_back(n);
    }
    m.indices.insert(m.indices.end(), {base, base + 1, base + 2});
  }
  if (m.indices.empty()) throw ParseError("mesh '" + path.string() + "' has only degenerate faces");
  return m;
}

// Water surfaces as one quad per region cell at the region's level.
inline Mesh water_mesh(const SceneDescriptor& scene) {
  Mesh m;
  const Heightmap& h = scene.terrain;
  const double half = 0.5 * h.cell_size;
  for (const auto& region : scene.water_regions) {
    const Mask cells = rasterize_polygon(region.polygon, h);
    for (int j = 0; j < h.height(); ++j) {
      for (int i = 0; i < h.width(); ++i) {
        if (!cells.at(i, j)) continue;
        const Vec2 p = h.vertex_position(i, j);
        const double z = region.water_level;
        append_quad(m, {p.x - half, p.y - half, z}, {p.x + half, p.y - half, z}, {p.x + half, p.y + half, z},
                    {p.x - half, p.y + half, z});
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Texture tiles and asset library

struct TextureTile {
  std::string id;
  RealGrid image;  // W x H x 3 in [0, 1]
};

struct ScatterRule {
  Category category = Category::kGrass;
  std::vector<std::string> asset_kinds;
  double density = 0.0;  // instances per square meter
};

struct TextureTileLibrary {
  std::map<Category, std::vector<TextureTile>> tiles;
  double tile_world_size = 4.0;  // meters covered by one tile repeat
  std::vector<ScatterRule> scatter_rules;
  double scatter_cell_size = 1.0;
  std::map<Category, std::string> meshes;  // "proxy:box" or an OBJ path
  std::map<std::string, std::array<double, 3>> scatter_colors;

  const TextureTile& tile_for(Category c) const {
    const auto it = tiles.find(c);
    if (it == tiles.end() || it->second.empty()) throw Error(std::string("missing tile for category ") + category_name(c));
    return it->second.front();
  }

  void require_channels(const std::vector<Category>& channels) const {
    for (auto c : channels) (void)tile_for(c);
  }
};

inline TextureTile constant_tile(const std::string& id, const std::array<double, 3>& rgb, int size = 8) {
  TextureTile t{id, RealGrid(size, size, 3, 0.0)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) t.image.at(x, y, c) = rgb[static_cast<std::size_t>(c)];
    }
  }
  return t;
}

// Palette tiles for every ground category, box proxies for foreground ones.
inline TextureTileLibrary default_library() {
  TextureTileLibrary lib;
  for (auto c : terrain_categories()) {
    lib.tiles[c].push_back(constant_tile(std::string(category_name(c)) + "_palette", category_color(c)));
  }
  for (auto c : {Category::kBuilding, Category::kBridge, Category::kTree}) lib.meshes[c] = "proxy:box";
  lib.scatter_rules = {{Category::kGrass, {"grass_tuft", "flower"}, 0.05}, {Category::kRock, {"pebble"}, 0.02}};
  lib.scatter_colors = {{"grass_tuft", {0.25, 0.55, 0.2}}, {"flower", {0.9, 0.8, 0.2}}, {"pebble", {0.5, 0.5, 0.5}}};
  return lib;
}

// Manifest layout:
//   {"tile_world_size": 4, "scatter_cell_size": 1,
//    "categories": {"grass": {"tiles": ["grass.png", {"id": "g2", "color": [r,g,b]}]},
//                   "building": {"mesh": "proxy:box"}},
//    "scatter": [{"category": "grass", "assets": ["grass_tuft"], "density": 0.05}]}
// Relative paths resolve against the manifest's directory.
inline TextureTileLibrary library_from_json(const Json& j, const std::filesystem::path& base_dir) {
  TextureTileLibrary lib;
  try {
    lib.tile_world_size = j.value("tile_world_size", 4.0);
    lib.scatter_cell_size = j.value("scatter_cell_size", 1.0);
    if (!(lib.tile_world_size > 0.0) || !(lib.scatter_cell_size > 0.0)) {
      throw ParseError("asset manifest: sizes must be positive");
    }
    for (const auto& [name, entry] : j.at("categories").items()) {
      const Category cat = category_from_json(name);
      if (entry.contains("mesh")) {
        const auto mesh = entry.at("mesh").get<std::string>();
        lib.meshes[cat] = mesh.rfind("proxy:", 0) == 0 ? mesh : (base_dir / mesh).string();
      }
      if (!entry.contains("tiles")) continue;
      for (const auto& t : entry.at("tiles")) {
        if (t.is_string()) {
          const auto path = base_dir / t.get<std::string>();
          const auto img = read_png8(path, 3);
          lib.tiles[cat].push_back({path.stem().string(), dequantize_color(img)});
        } else {
          const auto rgb = t.at("color").get<std::array<double, 3>>();
          lib.tiles[cat].push_back(constant_tile(t.at("id").get<std::string>(), rgb, t.value("size", 8)));
        }
      }
    }
    if (j.contains("scatter")) {
      for (const auto& r : j.at("scatter")) {
        ScatterRule rule;
        rule.category = category_from_json(r.at("category"));
        rule.asset_kinds = r.at("assets").get<std::vector<std::string>>();
        rule.density = r.at("density").get<double>();
        if (rule.asset_kinds.empty() || !(rule.density >= 0.0)) {
          throw ParseError("asset manifest: scatter rule needs assets and a non-negative density");
        }
        lib.scatter_rules.push_back(rule);
      }
    }
    if (j.contains("scatter_colors")) {
      for (const auto& [kind, rgb] : j.at("scatter_colors").items()) {
        lib.scatter_colors[kind] = rgb.get<std::array<double, 3>>();
      }
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("asset manifest: ") + e.what());
  }
  return lib;
}

inline TextureTileLibrary load_library(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ParseError("cannot open asset manifest '" + manifest.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("asset manifest '" + manifest.string() + "': " + e.what());
  }
  return library_from_json(j, manifest.parent_path());
}

// ---------------------------------------------------------------------------
// Texture compositing

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

// Bilinear lookup with wrap-around; (u, v) in tile pixels, centers at +0.5.
inline std::array<double, 3> sample_tile(const TextureTile& tile, double u, double v) {
  const int W = tile.image.width(), H = tile.image.height();
  const double fx = u - 0.5, fy = v - 0.5;
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  const double tx = fx - x0f, ty = fy - y0f;
  auto wrap = [](long k, int n) { return static_cast<int>(((k % n) + n) % n); };
  const int x0 = wrap(static_cast<long>(x0f), W), x1 = wrap(static_cast<long>(x0f) + 1, W);
  const int y0 = wrap(static_cast<long>(y0f), H), y1 = wrap(static_cast<long>(y0f) + 1, H);
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double top = lerp(tile.image.at(x0, y0, c), tile.image.at(x1, y0, c), tx);
    const double bottom = lerp(tile.image.at(x0, y1, c), tile.image.at(x1, y1, c), tx);
    out[static_cast<std::size_t>(c)] = lerp(top, bottom, ty);
  }
  return out;
}

// Tile color at a world position: the tile repeats every tile_world_size meters.
inline std::array<double, 3> tiled_color(const TextureTile& tile, double tile_world_size, Vec2 world) {
  auto wrap01 = [](double t) { return t - std::floor(t); };
  return sample_tile(tile, wrap01(world.x / tile_world_size) * tile.image.width(),
                     wrap01(world.y / tile_world_size) * tile.image.height());
}

// Output pixel (u, v) <-> world point; corner pixels land on corner vertices.
inline Vec2 texture_pixel_world(const Heightmap& grid, int u, int v, int out_w, int out_h) {
  const double fx = out_w > 1 ? static_cast<double>(u) / (out_w - 1) : 0.5;
  const double fy = out_h > 1 ? static_cast<double>(v) / (out_h - 1) : 0.5;
  return {grid.origin_x + fx * grid.extent_x(), grid.origin_y + fy * grid.extent_y()};
}

// Splat weights interpolated at a world point (bilinear, lerp form so equal
// corner weights reproduce exactly).
inline std::vector<double> sample_splat(const Splatmap& s, const Heightmap& grid, Vec2 world) {
  const int W = s.width(), H = s.height(), K = s.channel_count();
  const double gx = std::clamp((world.x - grid.origin_x) / grid.cell_size, 0.0, W - 1.0);
  const double gy = std::clamp((world.y - grid.origin_y) / grid.cell_size, 0.0, H - 1.0);
  const int i0 = std::min(static_cast<int>(gx), std::max(W - 2, 0)), j0 = std::min(static_cast<int>(gy), std::max(H - 2, 0));
  const int i1 = std::min(i0 + 1, W - 1), j1 = std::min(j0 + 1, H - 1);
  const double tx = gx - i0, ty = gy - j0;
  std::vector<double> w(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const double top = lerp(s.weights.at(i0, j0, k), s.weights.at(i1, j0, k), tx);
    const double bottom = lerp(s.weights.at(i0, j1, k), s.weights.at(i1, j1, k), tx);
    w[static_cast<std::size_t>(k)] = lerp(top, bottom, ty);
  }
  return w;
}

// color(p) = sum_k w_k(p) * tile_k(p mod tile size), row v = world Y.
inline RealGrid composite_texture(const Splatmap& splat, const Heightmap& grid, const TextureTileLibrary& lib,
                                  int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw Error("composite_texture: empty output");
  if (splat.width() != grid.width() || splat.height() != grid.height()) {
    throw Error("composite_texture: splatmap and heightmap grids differ");
  }
  lib.require_channels(splat.channel_categories);
  std::vector<const TextureTile*> tiles;
  for (auto c : splat.channel_categories) tiles.push_back(&lib.tile_for(c));
  RealGrid out(out_w, out_h, 3, 0.0);
  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      const Vec2 p = texture_pixel_world(grid, u, v, out_w, out_h);
      const auto w = sample_splat(splat, grid, p);
      for (std::size_t k = 0; k < tiles.size(); ++k) {
        if (w[k] == 0.0) continue;
        const auto rgb = tiled_color(*tiles[k], lib.tile_world_size, p);
        for (int c = 0; c < 3; ++c) out.at(u, v, c) += w[k] * rgb[static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scatter

struct ScatterInstance {
  std::string asset_kind;
  Category category = Category::kGrass;
  Vec3 position;
  double yaw = 0.0;
  double scale = 1.0;
};

namespace scatter_detail {

inline std::uint64_t cell_hash(std::uint64_t seed, Category cat, long ix, long iy, std::uint64_t salt) {
  std::uint64_t h = derive_seed(seed, static_cast<std::uint64_t>(cat) + 0x100 * salt);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  return splitmix64(h ^ (static_cast<std::uint64_t>(iy) << 1));
}

}  // namespace scatter_detail

// Jittered grid over the terrain: per rule and cell, spawn iff
// hash(cell, category, seed) < density * cell_area and the splat channel
// dominant at the cell center is the rule's category.
inline std::vector<ScatterInstance> scatter_vegetation(const Splatmap& splat, const Heightmap& hm,
                                                       const TextureTileLibrary& lib, std::uint64_t seed) {
  using scatter_detail::cell_hash;
  std::vector<ScatterInstance> out;
  if (splat.width() != hm.width() || splat.height() != hm.height()) {
    throw Error("scatter_vegetation: splatmap and heightmap grids differ");
  }
  const double cell = lib.scatter_cell_size;
  const long nx = static_cast<long>(std::floor(hm.extent_x() / cell + 1e-9));
  const long ny = static_cast<long>(std::floor(hm.extent_y() / cell + 1e-9));
  const double area = cell * cell;
  for (const auto& rule : lib.scatter_rules) {
    if (rule.density <= 0.0 || rule.asset_kinds.empty()) continue;
    const auto channel = std::find(splat.channel_categories.begin(), splat.channel_categories.end(), rule.category);
    if (channel == splat.channel_categories.end()) continue;
    const int k = static_cast<int>(channel - splat.channel_categories.begin());
    const double p = rule.density * area;
    for (long iy = 0; iy < ny; ++iy) {
      for (long ix = 0; ix < nx; ++ix) {
        const Vec2 c{hm.origin_x + (ix + 0.5) * cell, hm.origin_y + (iy + 0.5) * cell};
        const auto v = hm.nearest_vertex(c);
        if (splat.dominant_channel(v[0], v[1]) != k) continue;
        if (bits_to_unit(cell_hash(seed, rule.category, ix, iy, 0)) >= p) continue;
        ScatterInstance s;
        s.category = rule.category;
        const double jx = bits_to_unit(cell_hash(seed, rule.category, ix, iy, 1));
        const double jy = bits_to_unit(cell_hash(seed, rule.category, ix, iy, 2));
        const Vec2 pos{hm.origin_x + (ix + jx) * cell, hm.origin_y + (iy + jy) * cell};
        s.position = {pos.x, pos.y, hm.sample(pos)};
        const std::uint64_t pick = cell_hash(seed, rule.category, ix, iy, 3);
        s.asset_kind = rule.asset_kinds[pick % rule.asset_kinds.size()];
        s.yaw = 2.0 * std::numbers::pi * bits_to_unit(cell_hash(seed, rule.category, ix, iy, 4));
        s.scale = 0.2 + 0.2 * bits_to_unit(cell_hash(seed, rule.category, ix, iy, 5));
        out.push_back(s);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Object placement

struct PlacedObject {
  int instance_id = 0;
  Category category = Category::kBuilding;
  std::string mesh_ref;
  Mesh mesh;           // unit frame
  Vec3 translation;    // footprint center at base elevation
  Vec3 scale{1, 1, 1};
  double yaw = 0.0;

  Vec3 to_world(Vec3 p) const {
    const Vec3 s{p.x * scale.x, p.y * scale.y, p.z * scale.z};
    const double c = std::cos(yaw), sn = std::sin(yaw);
    return {translation.x + c * s.x - sn * s.y, translation.y + sn * s.x + c * s.y, translation.z + s.z};
  }

  std::vector<Vec3> world_positions() const {
    std::vector<Vec3> out;
    out.reserve(mesh.positions.size());
    for (const auto& p : mesh.positions) out.push_back(to_world(p));
    return out;
  }
};

struct PlacementDiagnosticEntry {
  int instance_id = 0;
  std::string message;
};

struct PlacedObjects {
  std::vector<PlacedObject> objects;
  std::vector<PlacementDiagnosticEntry> diagnostics;
};

inline PlacedObjects place_objects(const std::vector<ObjectPlacement>& placements, const TextureTileLibrary& lib) {
  PlacedObjects out;
  std::map<std::string, Mesh> cache;
  for (const auto& pl : placements) {
    if (!pl.footprint.valid() || !(pl.height > 0.0)) throw Error("place_objects: invalid placement");
    PlacedObject o;
    o.instance_id = pl.instance_id;
    o.category = pl.category;
    const auto it = lib.meshes.find(pl.category);
    if (it == lib.meshes.end()) {
      out.diagnostics.push_back({pl.instance_id, std::string("no mesh for category ") + category_name(pl.category) +
                                                     "; using box proxy"});
      o.mesh_ref = "proxy:box";
    } else {
      o.mesh_ref = it->second;
    }
    auto cached = cache.find(o.mesh_ref);
    if (cached == cache.end()) {
      Mesh m;
      if (o.mesh_ref.rfind("proxy:", 0) == 0) {
        if (o.mesh_ref != "proxy:box") {
          out.diagnostics.push_back({pl.instance_id, "unknown proxy '" + o.mesh_ref + "'; using box proxy"});
        }
        m = unit_box();
      } else {
        m = load_obj_unit(o.mesh_ref);
      }
      cached = cache.emplace(o.mesh_ref, std::move(m)).first;
    }
    o.mesh = cached->second;
    const Vec2 c = pl.footprint.center();
    o.translation = {c.x, c.y, pl.base_elevation};
    o.scale = {pl.footprint.width(), pl.footprint.depth(), pl.height};
    o.yaw = pl.footprint.yaw;
    out.objects.push_back(std::move(o));
  }
  return out;
}

}  // namespace isoscene
