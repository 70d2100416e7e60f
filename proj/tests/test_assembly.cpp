#include <cmath>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "isoscene/assembly.hpp"
#include "isoscene/gltf.hpp"
#include "isoscene/png_io.hpp"
#include "isoscene/understanding.hpp"
#include "support.hpp"

using namespace isoscene;

namespace {

Splatmap one_hot_splat(int w, int h, const std::vector<Category>& cats, std::size_t channel) {
  Splatmap s;
  s.channel_categories = cats;
  s.weights = RealGrid(w, h, static_cast<int>(cats.size()), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) s.weights.at(x, y, static_cast<int>(channel)) = 1.0;
  }
  return s;
}

TextureTile patterned_tile(int size) {
  TextureTile t{"pattern", RealGrid(size, size, 3, 0.0)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      t.image.at(x, y, 0) = (x * 7 % size) / static_cast<double>(size);
      t.image.at(x, y, 1) = (y * 3 % size) / static_cast<double>(size);
      t.image.at(x, y, 2) = ((x + y) % 2) * 0.5;
    }
  }
  return t;
}

struct Box3 {
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
};

Box3 bounds(const std::vector<Vec3>& pts) {
  Box3 b;
  for (const auto& p : pts) {
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b;
}

bool overlap(const Box3& a, const Box3& b) {
  return a.lo.x < b.hi.x && b.lo.x < a.hi.x && a.lo.y < b.hi.y && b.lo.y < a.hi.y;
}

SceneDescriptor flat_with_water() {
  auto s = fx::flat_scene(9, 1.0);
  for (int j = 3; j <= 5; ++j) {
    for (int i = 3; i <= 5; ++i) s.terrain.values.at(i, j) = 0.2;
  }
  s.water_regions.push_back({{{2.5, 2.5}, {5.5, 2.5}, {5.5, 5.5}, {2.5, 5.5}}, 1.0});
  return s;
}

}  // namespace

TEST(TerrainMesh, FlatNormalsPointUp) {
  const auto m = terrain_mesh(Heightmap(6, 5, 1.0, 0.0, 0.0, 2.0));
  for (const auto& n : m.normals) {
    EXPECT_EQ(n.x, 0.0);
    EXPECT_EQ(n.y, 0.0);
    EXPECT_EQ(n.z, 1.0);
  }
}

TEST(TerrainMesh, ThreeByThreeCounts) {
  const auto m = terrain_mesh(Heightmap(3, 3, 1.0, 0.0, 0.0));
  EXPECT_EQ(m.positions.size(), 9u);
  EXPECT_EQ(m.triangle_count(), 8u);
  for (auto i : m.indices) EXPECT_LT(i, 9u);
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const Vec3 a = m.positions[m.indices[3 * t]], b = m.positions[m.indices[3 * t + 1]],
               c = m.positions[m.indices[3 * t + 2]];
    EXPECT_GT(cross(b - a, c - a).z, 0.0);
  }
  EXPECT_THROW(terrain_mesh(Heightmap(1, 3, 1.0, 0.0, 0.0)), Error);
}

TEST(TerrainMesh, InclinedPlaneNormals) {
  Heightmap h(7, 7, 2.0, -3.0, 1.0);
  h.datum = 4.0;
  for (int j = 0; j < 7; ++j) {
    for (int i = 0; i < 7; ++i) h.values.at(i, j) = 0.5 * (i * 2.0) - 0.25 * (j * 2.0);
  }
  const auto m = terrain_mesh(h);
  const Vec3 expect = normalized({-0.5, 0.25, 1.0});
  for (const auto& n : m.normals) {
    EXPECT_NEAR(n.x, expect.x, 1e-12);
    EXPECT_NEAR(n.y, expect.y, 1e-12);
    EXPECT_NEAR(n.z, expect.z, 1e-12);
  }
  EXPECT_DOUBLE_EQ(m.positions[8].x, -1.0);
  EXPECT_DOUBLE_EQ(m.positions[8].y, 3.0);
  EXPECT_DOUBLE_EQ(m.positions[8].z, 4.0 + 0.5 * 2.0 - 0.25 * 2.0);
}

TEST(Texture, OneHotReproducesTile) {
  const std::vector<Category> cats{Category::kGrass, Category::kRock};
  TextureTileLibrary lib;
  lib.tiles[Category::kGrass].push_back(constant_tile("g", {0.1, 0.9, 0.1}));
  lib.tiles[Category::kRock].push_back(patterned_tile(16));
  lib.tile_world_size = 3.0;
  const Heightmap grid(11, 9, 1.0, 0.0, 0.0);
  const auto tex = composite_texture(one_hot_splat(11, 9, cats, 1), grid, lib, 81, 65);
  for (int v = 0; v < 65; ++v) {
    for (int u = 0; u < 81; ++u) {
      const auto rgb = tiled_color(lib.tile_for(Category::kRock), 3.0, texture_pixel_world(grid, u, v, 81, 65));
      for (int c = 0; c < 3; ++c) ASSERT_EQ(tex.at(u, v, c), rgb[static_cast<std::size_t>(c)]);
    }
  }
}

TEST(Texture, ConstantTilesSampleExactly) {
  const auto t = constant_tile("c", {0.2, 0.4, 0.6}, 5);
  for (double u : {0.0, 0.3, 2.5, 4.99, -1.2}) {
    const auto rgb = sample_tile(t, u, u * 0.7);
    EXPECT_DOUBLE_EQ(rgb[0], 0.2);
    EXPECT_DOUBLE_EQ(rgb[1], 0.4);
    EXPECT_DOUBLE_EQ(rgb[2], 0.6);
  }
}

TEST(Texture, HalfBlendWithinOneQuantizationStep) {
  const std::vector<Category> cats{Category::kGrass, Category::kSand};
  TextureTileLibrary lib;
  const std::array<double, 3> a{0.1, 0.7, 0.3}, b{0.9, 0.2, 0.5};
  lib.tiles[Category::kGrass].push_back(constant_tile("a", a));
  lib.tiles[Category::kSand].push_back(constant_tile("b", b));
  Splatmap s;
  s.channel_categories = cats;
  s.weights = RealGrid(5, 5, 2, 0.5);
  const auto tex = quantize_color(composite_texture(s, Heightmap(5, 5, 1.0, 0.0, 0.0), lib, 33, 33));
  for (int v = 0; v < 33; ++v) {
    for (int u = 0; u < 33; ++u) {
      for (int c = 0; c < 3; ++c) {
        const double avg = 255.0 * 0.5 * (a[static_cast<std::size_t>(c)] + b[static_cast<std::size_t>(c)]);
        ASSERT_LE(std::abs(tex.at(u, v, c) - avg), 1.0);
      }
    }
  }
}

TEST(Texture, FixturePaletteMatchesBev) {
  FixtureConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto scene = generate_random_scene(seed, cfg);
    const auto bev = render_bev(scene);
    const int W = scene.terrain.width(), H = scene.terrain.height();
    const auto tex = composite_texture(scene.splat, scene.terrain, default_library(), W, H);
    double mae = 0.0;
    for (std::size_t k = 0; k < tex.size(); ++k) mae += std::abs(tex[k] - bev.color[k]);
    EXPECT_LE(mae / static_cast<double>(tex.size()), 2.0 / 255.0) << "seed " << seed;
  }
}

TEST(Texture, MissingTileRejected) {
  TextureTileLibrary lib;
  const std::vector<Category> cats{Category::kGrass};
  EXPECT_THROW(composite_texture(one_hot_splat(3, 3, cats, 0), Heightmap(3, 3, 1.0, 0.0, 0.0), lib, 4, 4), Error);
  lib.tiles[Category::kGrass].push_back(constant_tile("g", {0, 1, 0}));
  EXPECT_THROW(composite_texture(one_hot_splat(3, 3, cats, 0), Heightmap(4, 3, 1.0, 0.0, 0.0), lib, 4, 4), Error);
}

TEST(Scatter, ZeroDensityGivesNothing) {
  auto lib = default_library();
  for (auto& r : lib.scatter_rules) r.density = 0.0;
  const auto s = fx::flat_scene(30);
  EXPECT_TRUE(scatter_vegetation(s.splat, s.terrain, lib, 1).empty());
}

TEST(Scatter, CountMatchesDensity) {
  TextureTileLibrary lib;
  lib.scatter_rules = {{Category::kGrass, {"tuft"}, 0.1}};
  const auto s = fx::flat_scene(101);
  const double expected = 0.1 * s.terrain.extent_x() * s.terrain.extent_y();
  ASSERT_DOUBLE_EQ(expected, 1000.0);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto n = static_cast<double>(scatter_vegetation(s.splat, s.terrain, lib, seed).size());
    EXPECT_NEAR(n, expected, 0.1 * expected) << "seed " << seed;
    total += n;
  }
  EXPECT_NEAR(total / 20.0, expected, 0.03 * expected);
}

TEST(Scatter, RespectsDominantCategoryAndBounds) {
  auto lib = default_library();
  auto s = fx::flat_scene(40);
  // Right half becomes sand, where no rule applies.
  for (int j = 0; j < 40; ++j) {
    for (int i = 20; i < 40; ++i) {
      for (int k = 0; k < s.splat.channel_count(); ++k) s.splat.weights.at(i, j, k) = 0.0;
      s.splat.weights.at(i, j, 2) = 1.0;
    }
  }
  ASSERT_EQ(s.splat.channel_categories[2], Category::kSand);
  const auto inst = scatter_vegetation(s.splat, s.terrain, lib, 11);
  ASSERT_FALSE(inst.empty());
  for (const auto& p : inst) {
    EXPECT_TRUE(s.terrain.contains({p.position.x, p.position.y}));
    EXPECT_LT(p.position.x, 20.0);
    EXPECT_EQ(p.category, Category::kGrass);
    EXPECT_DOUBLE_EQ(p.position.z, 0.0);
  }
}

TEST(Scatter, DeterministicPerSeed) {
  const auto lib = default_library();
  const auto s = fx::flat_scene(50);
  const auto a = scatter_vegetation(s.splat, s.terrain, lib, 5);
  const auto b = scatter_vegetation(s.splat, s.terrain, lib, 5);
  const auto c = scatter_vegetation(s.splat, s.terrain, lib, 6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].position.x, b[k].position.x);
    EXPECT_EQ(a[k].position.y, b[k].position.y);
    EXPECT_EQ(a[k].asset_kind, b[k].asset_kind);
  }
  bool differs = a.size() != c.size();
  for (std::size_t k = 0; !differs && k < a.size(); ++k) differs = a[k].position.x != c[k].position.x;
  EXPECT_TRUE(differs);
}

TEST(Placement, BoxExtentsMatchFootprintAndHeight) {
  const auto placed = place_objects({fx::box_at(1, 10, 20, 4, 6, 3, 1.5)}, default_library());
  ASSERT_EQ(placed.objects.size(), 1u);
  const Box3 b = bounds(placed.objects[0].world_positions());
  EXPECT_NEAR(b.hi.x - b.lo.x, 4.0, 1e-12);
  EXPECT_NEAR(b.hi.y - b.lo.y, 6.0, 1e-12);
  EXPECT_NEAR(b.hi.z - b.lo.z, 3.0, 1e-12);
  EXPECT_NEAR(b.lo.x, 10.0, 1e-12);
  EXPECT_NEAR(b.lo.y, 20.0, 1e-12);
  EXPECT_NEAR(b.lo.z, 1.5, 1e-12);
}

TEST(Placement, DisjointFootprintsGiveDisjointBoxes) {
  std::vector<ObjectPlacement> pls{fx::box_at(1, 0, 0, 4, 4, 2), fx::box_at(2, 5, 0, 3, 4, 5),
                                   fx::box_at(3, 0, 6, 8, 2, 1)};
  const auto placed = place_objects(pls, default_library());
  ASSERT_EQ(placed.objects.size(), 3u);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      EXPECT_FALSE(overlap(bounds(placed.objects[a].world_positions()), bounds(placed.objects[b].world_positions())));
    }
  }
}

TEST(Placement, MissingMeshFallsBackWithDiagnostic) {
  TextureTileLibrary lib;
  const auto placed = place_objects({fx::box_at(4, 0, 0, 1, 1, 1)}, lib);
  ASSERT_EQ(placed.objects.size(), 1u);
  EXPECT_EQ(placed.objects[0].mesh_ref, "proxy:box");
  ASSERT_EQ(placed.diagnostics.size(), 1u);
  EXPECT_EQ(placed.diagnostics[0].instance_id, 4);
  auto bad = fx::box_at(5, 0, 0, 1, 1, 1);
  bad.height = 0.0;
  EXPECT_THROW(place_objects({bad}, lib), Error);
}

TEST(Placement, ObjMeshFitsUnitFrame) {
  const auto dir = fx::scratch_dir("obj");
  std::ofstream(dir / "wedge.obj") << "v 0 0 0\nv 2 0 0\nv 2 0 4\nv 0 0 4\nv 0 3 0\nv 2 3 0\n"
                                      "f 1 2 3 4\nf 1 5 6 2\nf 4 5 1\n";
  const auto m = load_obj_unit(dir / "wedge.obj");
  const Box3 b = bounds(m.positions);
  EXPECT_DOUBLE_EQ(b.lo.x, -0.5);
  EXPECT_DOUBLE_EQ(b.hi.y, 0.5);
  EXPECT_DOUBLE_EQ(b.lo.z, 0.0);
  EXPECT_DOUBLE_EQ(b.hi.z, 1.0);
  EXPECT_EQ(m.indices.size(), 15u);
  std::ofstream(dir / "bad.obj") << "v 0 0 0\nf 1 2 3\n";
  EXPECT_THROW(load_obj_unit(dir / "bad.obj"), ParseError);
  EXPECT_THROW(load_obj_unit(dir / "none.obj"), ParseError);
}

TEST(Placement, RoundTripBevOverlap) {
  FixtureConfig cfg;
  double iou_sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto scene = generate_random_scene(seed, cfg);
    if (scene.objects.empty()) continue;
    const auto f = fx::render_scene(scene, 512, 512);
    UnderstandingConfig uc;
    uc.grid.origin_x = scene.terrain.origin_x;
    uc.grid.origin_y = scene.terrain.origin_y;
    uc.grid.width = scene.terrain.width();
    uc.grid.height = scene.terrain.height();
    const auto r = run_understanding(f, uc);
    const auto placed = place_objects(r.placements.placements, default_library());
    std::vector<Box3> boxes;
    for (const auto& o : placed.objects) boxes.push_back(bounds(o.world_positions()));
    const double step = 0.25;
    std::size_t inter = 0, uni = 0;
    for (double y = scene.terrain.origin_y + step / 2; y < scene.terrain.origin_y + scene.terrain.extent_y(); y += step) {
      for (double x = scene.terrain.origin_x + step / 2; x < scene.terrain.origin_x + scene.terrain.extent_x();
           x += step) {
        bool truth = false, got = false;
        for (const auto& o : scene.objects) {
          const auto& fp = o.footprint;
          truth = truth || (x >= fp.min_x && x <= fp.max_x && y >= fp.min_y && y <= fp.max_y);
        }
        for (const auto& b : boxes) got = got || (x >= b.lo.x && x <= b.hi.x && y >= b.lo.y && y <= b.hi.y);
        inter += truth && got;
        uni += truth || got;
      }
    }
    ASSERT_GT(uni, 0u);
    iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++n;
  }
  ASSERT_GT(n, 0);
  EXPECT_GE(iou_sum / n, 0.8);
}

TEST(Glb, MinimalSceneIsValid) {
  const auto scene = fx::flat_scene(3);
  const auto a = assemble_scene(scene, default_library(), 0);
  const auto glb = build_glb(a, default_library());
  const auto r = validate_glb(glb);
  EXPECT_TRUE(r.ok()) << (r.problems.empty() ? "" : r.problems.front());
  EXPECT_EQ(r.triangle_count, 8u + 6u * a.scatter.size());
  EXPECT_EQ(r.node_count, 1u + a.scatter.size());
}

TEST(Glb, RepeatExportIsByteIdentical) {
  FixtureConfig cfg;
  const auto scene = generate_random_scene(3, cfg);
  const auto lib = default_library();
  const auto a = build_glb(assemble_scene(scene, lib, 9), lib);
  const auto b = build_glb(assemble_scene(scene, lib, 9), lib);
  EXPECT_EQ(a, b);
}

TEST(Glb, NodeCountIsTerrainObjectsScatter) {
  FixtureConfig cfg;
  cfg.water_probability = 1.0;
  const auto lib = default_library();
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto scene = generate_random_scene(seed, cfg);
    const auto a = assemble_scene(scene, lib, seed);
    const auto r = validate_glb(build_glb(a, lib));
    ASSERT_TRUE(r.ok()) << r.problems.front();
    EXPECT_EQ(r.node_count, 1 + scene.objects.size() + a.scatter.size());
  }
}

TEST(Glb, WaterIsSecondTerrainPrimitive) {
  const auto lib = default_library();
  const auto a = assemble_scene(flat_with_water(), lib, 0);
  EXPECT_EQ(a.water.indices.size(), 9u * 6u);
  const auto r = validate_glb(build_glb(a, lib));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.json["meshes"][0]["primitives"].size(), 2u);
}

TEST(Glb, StructuralDefectsReported) {
  const auto lib = default_library();
  const auto base = assemble_scene(fx::flat_scene(4), lib, 0);
  auto glb = build_glb(base, lib);
  auto bad_magic = glb;
  bad_magic[0] = 'x';
  EXPECT_FALSE(validate_glb(bad_magic).ok());
  auto truncated = glb;
  truncated.resize(glb.size() - 16);
  EXPECT_FALSE(validate_glb(truncated).ok());
  EXPECT_FALSE(validate_glb({}).ok());

  auto nan_scene = base;
  nan_scene.terrain.positions[0].z = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(validate_glb(build_glb(nan_scene, lib)).ok());
  auto long_normal = base;
  long_normal.terrain.normals[0] = {0.0, 0.0, 2.0};
  EXPECT_FALSE(validate_glb(build_glb(long_normal, lib)).ok());
  auto bad_index = base;
  bad_index.terrain.indices[0] = 1000;
  EXPECT_FALSE(validate_glb(build_glb(bad_index, lib)).ok());
}

TEST(Glb, ExportWritesArtifacts) {
  FixtureConfig cfg;
  const auto scene = generate_random_scene(2, cfg);
  const auto lib = default_library();
  const auto a = assemble_scene(scene, lib, 1);
  const auto dir = fx::scratch_dir("export");
  const auto r = export_scene(a, lib, dir);
  EXPECT_TRUE(r.ok());
  for (const char* f : {"scene.glb", "scene.json", "heightmap.png", "heightmap.json", "texture.png", "diagnostics.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  for (int k = 0; k < scene.splat.channel_count(); ++k) {
    EXPECT_TRUE(std::filesystem::exists(dir / ("splat_" + std::to_string(k) + ".png")));
  }
  const auto hm = read_png16(dir / "heightmap.png");
  EXPECT_EQ(hm.width(), scene.terrain.width());
  EXPECT_THROW(export_scene(a, lib, dir / "missing"), IoError);
}

TEST(Manifest, ParsesTilesMeshesAndScatter) {
  const auto dir = fx::scratch_dir("manifest");
  Raster<std::uint8_t> img(4, 4, 3, 0);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(i * 9);
  write_png8(dir / "mossy.png", img);
  std::ofstream(dir / "assets.json") << R"({
    "tile_world_size": 2.5,
    "categories": {
      "grass": {"tiles": ["mossy.png", {"id": "g2", "color": [0.1, 0.8, 0.1]}]},
      "rock": {"tiles": [{"id": "r", "color": [0.5, 0.5, 0.5], "size": 4}]},
      "building": {"mesh": "proxy:box"},
      "tree": {"mesh": "tree.obj"}
    },
    "scatter": [{"category": "grass", "assets": ["tuft"], "density": 0.2}]
  })";
  const auto lib = load_library(dir / "assets.json");
  EXPECT_DOUBLE_EQ(lib.tile_world_size, 2.5);
  ASSERT_EQ(lib.tiles.at(Category::kGrass).size(), 2u);
  EXPECT_EQ(lib.tile_for(Category::kGrass).id, "mossy");
  EXPECT_EQ(lib.tile_for(Category::kGrass).image.width(), 4);
  EXPECT_EQ(lib.tile_for(Category::kRock).image.width(), 4);
  EXPECT_EQ(lib.meshes.at(Category::kBuilding), "proxy:box");
  EXPECT_EQ(lib.meshes.at(Category::kTree), (dir / "tree.obj").string());
  ASSERT_EQ(lib.scatter_rules.size(), 1u);
  EXPECT_DOUBLE_EQ(lib.scatter_rules[0].density, 0.2);
  EXPECT_THROW(lib.tile_for(Category::kSand), Error);
}

TEST(Manifest, MalformedInputsAreParseErrors) {
  const auto dir = fx::scratch_dir("manifest_bad");
  EXPECT_THROW(load_library(dir / "absent.json"), ParseError);
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_THROW(load_library(dir / "broken.json"), ParseError);
  EXPECT_THROW(library_from_json(Json::parse(R"({"categories": {"lava": {}}})"), dir), ParseError);
  EXPECT_THROW(library_from_json(Json::parse(R"({"categories": {}, "scatter": [{"category": "grass",
                                                 "assets": ["a"], "density": -1}]})"),
                                 dir),
               ParseError);
  EXPECT_THROW(library_from_json(Json::parse(R"({"categories": {"grass": {"tiles": ["nope.png"]}}})"), dir),
               ParseError);
  EXPECT_THROW(library_from_json(Json::parse(R"({"tile_world_size": 0, "categories": {}})"), dir), ParseError);
}
