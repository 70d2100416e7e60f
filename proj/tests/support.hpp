#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "isoscene/fixture.hpp"
#include "isoscene/scene.hpp"

namespace isoscene::fx {

// Flat n x n vertex terrain with unit cells, all grass.
inline SceneDescriptor flat_scene(int n, double elevation = 0.0) {
  SceneDescriptor s;
  s.terrain = Heightmap(n, n, 1.0, 0.0, 0.0, elevation);
  s.splat.channel_categories = terrain_categories();
  s.splat.weights = RealGrid(n, n, static_cast<int>(s.splat.channel_categories.size()), 0.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) s.splat.weights.at(i, j, 0) = 1.0;
  }
  return s;
}

inline ObjectPlacement box_at(int id, double x, double y, double w, double d, double h, double base = 0.0) {
  ObjectPlacement p;
  p.instance_id = id;
  p.category = Category::kBuilding;
  p.footprint = {x, x + w, y, y + d, 0.0};
  p.height = h;
  p.base_elevation = base;
  p.asset_ref = "proxy:box";
  return p;
}

inline IsometricFrame render_scene(SceneDescriptor& scene, int width = 512, int height = 512) {
  const IsometricCamera cam = fit_camera(scene, width, height);
  scene.camera = cam;
  return render_isometric(scene, cam);
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("isoscene_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace isoscene::fx
