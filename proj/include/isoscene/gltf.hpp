#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isoscene/assembly.hpp"
#include "isoscene/error.hpp"
#include "isoscene/png_io.hpp"
#include "isoscene/scene.hpp"

namespace isoscene {

// glTF is Y-up with +Z toward the viewer; the scene is Z-up.
inline std::array<float, 3> to_gltf(Vec3 p) {
  return {static_cast<float>(p.x), static_cast<float>(p.z), static_cast<float>(-p.y)};
}

namespace gltf_detail {

constexpr std::uint32_t kMagic = 0x46546C67;  // "glTF"
constexpr std::uint32_t kChunkJson = 0x4E4F534A;
constexpr std::uint32_t kChunkBin = 0x004E4942;
constexpr int kFloat = 5126;
constexpr int kUnsignedInt = 5125;
constexpr int kArrayBuffer = 34962;
constexpr int kElementArrayBuffer = 34963;

class Builder {
 public:
  Json doc;
  std::vector<std::uint8_t> bin;

  Builder() {
    doc["asset"] = {{"version", "2.0"}, {"generator", "isoscene"}};
    for (const char* key : {"accessors", "bufferViews", "meshes", "nodes", "materials"}) doc[key] = Json::array();
  }

  int view(const void* data, std::size_t bytes, std::optional<int> target) {
    align();
    const std::size_t offset = bin.size();
    const auto* p = static_cast<const std::uint8_t*>(data);
    bin.insert(bin.end(), p, p + bytes);
    Json v{{"buffer", 0}, {"byteOffset", offset}, {"byteLength", bytes}};
    if (target) v["target"] = *target;
    doc["bufferViews"].push_back(v);
    return static_cast<int>(doc["bufferViews"].size()) - 1;
  }

  int vec3_accessor(const std::vector<std::array<float, 3>>& data, bool bounds) {
    const int v = view(data.data(), data.size() * sizeof(data[0]), kArrayBuffer);
    Json a{{"bufferView", v}, {"componentType", kFloat}, {"count", data.size()}, {"type", "VEC3"}};
    if (bounds) {
      std::array<float, 3> lo{data[0]}, hi{data[0]};
      for (const auto& d : data) {
        for (int k = 0; k < 3; ++k) {
          lo[static_cast<std::size_t>(k)] = std::min(lo[static_cast<std::size_t>(k)], d[static_cast<std::size_t>(k)]);
          hi[static_cast<std::size_t>(k)] = std::max(hi[static_cast<std::size_t>(k)], d[static_cast<std::size_t>(k)]);
        }
      }
      a["min"] = lo;
      a["max"] = hi;
    }
    return push_accessor(a);
  }

  int vec2_accessor(const std::vector<std::array<float, 2>>& data) {
    const int v = view(data.data(), data.size() * sizeof(data[0]), kArrayBuffer);
    return push_accessor({{"bufferView", v}, {"componentType", kFloat}, {"count", data.size()}, {"type", "VEC2"}});
  }

  int index_accessor(const std::vector<std::uint32_t>& idx) {
    const int v = view(idx.data(), idx.size() * sizeof(idx[0]), kElementArrayBuffer);
    return push_accessor({{"bufferView", v}, {"componentType", kUnsignedInt}, {"count", idx.size()}, {"type", "SCALAR"}});
  }

  int material(const std::string& name, const std::array<double, 3>& rgb, std::optional<int> texture = {}) {
    Json pbr{{"baseColorFactor", {rgb[0], rgb[1], rgb[2], 1.0}}, {"metallicFactor", 0.0}, {"roughnessFactor", 1.0}};
    if (texture) pbr["baseColorTexture"] = {{"index", *texture}};
    doc["materials"].push_back({{"name", name}, {"pbrMetallicRoughness", pbr}});
    return static_cast<int>(doc["materials"].size()) - 1;
  }

  Json primitive(const Mesh& m, int material_index) {
    std::vector<std::array<float, 3>> pos, nrm;
    for (const auto& p : m.positions) pos.push_back(to_gltf(p));
    for (const auto& n : m.normals) nrm.push_back(to_gltf(n));
    return {{"attributes", {{"POSITION", vec3_accessor(pos, true)}, {"NORMAL", vec3_accessor(nrm, false)}}},
            {"indices", index_accessor(m.indices)},
            {"material", material_index},
            {"mode", 4}};
  }

  int mesh(const std::string& name, Json primitives) {
    doc["meshes"].push_back({{"name", name}, {"primitives", std::move(primitives)}});
    return static_cast<int>(doc["meshes"].size()) - 1;
  }

  int node(Json n) {
    doc["nodes"].push_back(std::move(n));
    return static_cast<int>(doc["nodes"].size()) - 1;
  }

  std::vector<std::uint8_t> finish() {
    align();
    doc["buffers"] = Json::array({{{"byteLength", bin.size()}}});
    std::string json = doc.dump();
    while (json.size() % 4 != 0) json.push_back(' ');
    std::vector<std::uint8_t> out;
    auto put32 = [&out](std::uint32_t v) {
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    };
    const auto total = static_cast<std::uint32_t>(12 + 8 + json.size() + 8 + bin.size());
    put32(kMagic);
    put32(2);
    put32(total);
    put32(static_cast<std::uint32_t>(json.size()));
    put32(kChunkJson);
    out.insert(out.end(), json.begin(), json.end());
    put32(static_cast<std::uint32_t>(bin.size()));
    put32(kChunkBin);
    out.insert(out.end(), bin.begin(), bin.end());
    return out;
  }

 private:
  int push_accessor(Json a) {
    doc["accessors"].push_back(std::move(a));
    return static_cast<int>(doc["accessors"].size()) - 1;
  }
  void align() {
    while (bin.size() % 4 != 0) bin.push_back(0);
  }
};

inline std::uint32_t get32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace gltf_detail

// ---------------------------------------------------------------------------
// Structural check of a GLB byte stream

struct GlbReport {
  std::vector<std::string> problems;
  std::size_t node_count = 0;
  std::size_t mesh_count = 0;
  std::size_t triangle_count = 0;
  Json json;

  bool ok() const { return problems.empty(); }
};

// Container layout, accessor/bufferView bounds, index ranges, unit normals
// (1e-6) and finite positions.
inline GlbReport validate_glb(const std::vector<std::uint8_t>& bytes) {
  using namespace gltf_detail;
  GlbReport r;
  auto fail = [&r](std::string m) {
    r.problems.push_back(std::move(m));
    return r;
  };
  if (bytes.size() < 28) return fail("file too short");
  if (get32(bytes, 0) != kMagic) return fail("bad magic");
  if (get32(bytes, 4) != 2) return fail("unsupported version");
  if (get32(bytes, 8) != bytes.size()) return fail("header length does not match file size");
  const std::uint32_t json_len = get32(bytes, 12);
  if (get32(bytes, 16) != kChunkJson) return fail("first chunk is not JSON");
  if (20 + static_cast<std::size_t>(json_len) > bytes.size()) return fail("JSON chunk overruns file");
  try {
    r.json = Json::parse(bytes.begin() + 20, bytes.begin() + 20 + json_len);
  } catch (const Json::exception& e) {
    return fail(std::string("JSON chunk does not parse: ") + e.what());
  }
  std::size_t bin_at = 20 + json_len;
  std::vector<std::uint8_t> bin;
  if (bin_at < bytes.size()) {
    if (bin_at + 8 > bytes.size()) return fail("truncated BIN chunk header");
    const std::uint32_t bin_len = get32(bytes, bin_at);
    if (get32(bytes, bin_at + 4) != kChunkBin) return fail("second chunk is not BIN");
    if (bin_at + 8 + bin_len > bytes.size()) return fail("BIN chunk overruns file");
    bin.assign(bytes.begin() + static_cast<long>(bin_at) + 8, bytes.begin() + static_cast<long>(bin_at + 8 + bin_len));
  }
  const Json& doc = r.json;
  if (!doc.contains("asset") || doc["asset"].value("version", "") != "2.0") return fail("asset.version must be 2.0");
  const Json empty = Json::array();
  const Json& views = doc.contains("bufferViews") ? doc["bufferViews"] : empty;
  const Json& accessors = doc.contains("accessors") ? doc["accessors"] : empty;
  const Json& meshes = doc.contains("meshes") ? doc["meshes"] : empty;
  const Json& nodes = doc.contains("nodes") ? doc["nodes"] : empty;
  r.mesh_count = meshes.size();
  r.node_count = nodes.size();
  if (doc.contains("buffers") && !doc["buffers"].empty() && doc["buffers"][0].value("byteLength", 0ULL) > bin.size()) {
    return fail("buffer 0 larger than BIN chunk");
  }
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto off = views[v].value("byteOffset", 0ULL), len = views[v].value("byteLength", 0ULL);
    if (off + len > bin.size()) return fail("bufferView " + std::to_string(v) + " out of buffer range");
  }

  struct View {
    const std::uint8_t* data = nullptr;
    std::size_t count = 0;
    int components = 0;
    int type = 0;
  };
  auto accessor = [&](int index, View& out) -> bool {
    if (index < 0 || static_cast<std::size_t>(index) >= accessors.size()) return false;
    const Json& a = accessors[static_cast<std::size_t>(index)];
    const auto vi = a.value("bufferView", -1);
    if (vi < 0 || static_cast<std::size_t>(vi) >= views.size()) return false;
    const std::string type = a.value("type", "");
    out.components = type == "SCALAR" ? 1 : type == "VEC2" ? 2 : type == "VEC3" ? 3 : type == "VEC4" ? 4 : 0;
    out.type = a.value("componentType", 0);
    out.count = a.value("count", 0ULL);
    const int size = out.type == kFloat || out.type == kUnsignedInt ? 4 : out.type == 5123 ? 2 : out.type == 5121 ? 1 : 0;
    if (out.components == 0 || size == 0) return false;
    const Json& v = views[static_cast<std::size_t>(vi)];
    const auto off = v.value("byteOffset", 0ULL) + a.value("byteOffset", 0ULL);
    if (off + out.count * out.components * size > v.value("byteOffset", 0ULL) + v.value("byteLength", 0ULL)) {
      return false;
    }
    out.data = bin.data() + off;
    return true;
  };
  auto read_float = [](const View& v, std::size_t i) {
    float f;
    std::memcpy(&f, v.data + 4 * i, 4);
    return f;
  };

  for (std::size_t mi = 0; mi < meshes.size(); ++mi) {
    const std::string where = "mesh " + std::to_string(mi);
    for (const auto& prim : meshes[mi].value("primitives", empty)) {
      const Json attrs = prim.value("attributes", Json::object());
      View pos;
      if (!attrs.contains("POSITION") || !accessor(attrs["POSITION"].get<int>(), pos) || pos.components != 3 ||
          pos.type != kFloat) {
        return fail(where + ": missing or malformed POSITION accessor");
      }
      for (std::size_t i = 0; i < pos.count * 3; ++i) {
        if (!std::isfinite(read_float(pos, i))) return fail(where + ": non-finite position");
      }
      if (attrs.contains("NORMAL")) {
        View nrm;
        if (!accessor(attrs["NORMAL"].get<int>(), nrm) || nrm.components != 3 || nrm.type != kFloat ||
            nrm.count != pos.count) {
          return fail(where + ": malformed NORMAL accessor");
        }
        for (std::size_t i = 0; i < nrm.count; ++i) {
          double len2 = 0.0;
          for (int k = 0; k < 3; ++k) {
            const double c = read_float(nrm, 3 * i + static_cast<std::size_t>(k));
            if (!std::isfinite(c)) return fail(where + ": non-finite normal");
            len2 += c * c;
          }
          if (std::abs(std::sqrt(len2) - 1.0) > 1e-6) return fail(where + ": normal is not unit length");
        }
      }
      if (attrs.contains("TEXCOORD_0")) {
        View uv;
        if (!accessor(attrs["TEXCOORD_0"].get<int>(), uv) || uv.components != 2 || uv.count != pos.count) {
          return fail(where + ": malformed TEXCOORD_0 accessor");
        }
        for (std::size_t i = 0; i < uv.count * 2; ++i) {
          if (!std::isfinite(read_float(uv, i))) return fail(where + ": non-finite texture coordinate");
        }
      }
      if (prim.contains("indices")) {
        View idx;
        if (!accessor(prim["indices"].get<int>(), idx) || idx.components != 1 || idx.type != kUnsignedInt) {
          return fail(where + ": malformed index accessor");
        }
        if (idx.count % 3 != 0) return fail(where + ": index count not a multiple of 3");
        for (std::size_t i = 0; i < idx.count; ++i) {
          std::uint32_t k;
          std::memcpy(&k, idx.data + 4 * i, 4);
          if (k >= pos.count) return fail(where + ": index out of range");
        }
        r.triangle_count += idx.count / 3;
      }
    }
  }
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (nodes[n].contains("mesh")) {
      const int m = nodes[n]["mesh"].get<int>();
      if (m < 0 || static_cast<std::size_t>(m) >= meshes.size()) return fail("node " + std::to_string(n) + ": bad mesh");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Assembled scene and export

struct AssembledScene {
  SceneDescriptor descriptor;
  TerrainMesh terrain;
  Mesh water;
  RealGrid texture;
  std::vector<ScatterInstance> scatter;
  PlacedObjects objects;
};

// Terrain texture resolution for a heightmap: texels per cell edge.
inline constexpr int kTexelsPerCell = 8;

inline AssembledScene assemble_scene(const SceneDescriptor& scene, const TextureTileLibrary& lib,
                                     std::uint64_t scatter_seed, int texels_per_cell = kTexelsPerCell) {
  AssembledScene a;
  a.descriptor = scene;
  a.terrain = terrain_mesh(scene.terrain);
  a.water = water_mesh(scene);
  const int tw = (scene.terrain.width() - 1) * texels_per_cell + 1;
  const int th = (scene.terrain.height() - 1) * texels_per_cell + 1;
  a.texture = composite_texture(scene.splat, scene.terrain, lib, tw, th);
  a.scatter = scatter_vegetation(scene.splat, scene.terrain, lib, scatter_seed);
  a.objects = place_objects(scene.objects, lib);
  a.descriptor.texture_assignments.clear();
  for (auto c : scene.splat.channel_categories) a.descriptor.texture_assignments[category_name(c)] = lib.tile_for(c).id;
  return a;
}

// Nodes: terrain (with the water surface as a second primitive), one per
// object, one per scatter instance sharing a marker mesh per asset kind.
inline std::vector<std::uint8_t> build_glb(const AssembledScene& a, const TextureTileLibrary& lib) {
  using namespace gltf_detail;
  Builder b;
  Json scene_nodes = Json::array();

  // Terrain with its composited texture.
  {
    const auto png = encode_png8(quantize_color(a.texture));
    const int img_view = b.view(png.data(), png.size(), std::nullopt);
    b.doc["images"] = Json::array({{{"bufferView", img_view}, {"mimeType", "image/png"}}});
    b.doc["samplers"] = Json::array({{{"magFilter", 9729}, {"minFilter", 9729}, {"wrapS", 33071}, {"wrapT", 33071}}});
    b.doc["textures"] = Json::array({{{"sampler", 0}, {"source", 0}}});
    const int mat = b.material("terrain", {1.0, 1.0, 1.0}, 0);
    std::vector<std::array<float, 3>> pos, nrm;
    std::vector<std::array<float, 2>> uv;
    for (const auto& p : a.terrain.positions) pos.push_back(to_gltf(p));
    for (const auto& n : a.terrain.normals) nrm.push_back(to_gltf(n));
    // Texture rows follow world +Y.
    for (const auto& t : a.terrain.uvs) uv.push_back({static_cast<float>(t.x), static_cast<float>(t.y)});
    Json prims = Json::array();
    prims.push_back({{"attributes",
                      {{"POSITION", b.vec3_accessor(pos, true)},
                       {"NORMAL", b.vec3_accessor(nrm, false)},
                       {"TEXCOORD_0", b.vec2_accessor(uv)}}},
                     {"indices", b.index_accessor(a.terrain.indices)},
                     {"material", mat},
                     {"mode", 4}});
    if (!a.water.indices.empty()) {
      prims.push_back(b.primitive(a.water, b.material("water", category_color(Category::kWater))));
    }
    const int mesh = b.mesh("terrain", prims);
    scene_nodes.push_back(b.node({{"name", "terrain"}, {"mesh", mesh}}));
  }

  // Objects: one mesh per object, vertices in the unit frame, TRS on the node.
  std::map<Category, int> object_materials;
  for (const auto& o : a.objects.objects) {
    auto mit = object_materials.find(o.category);
    if (mit == object_materials.end()) {
      mit = object_materials.emplace(o.category, b.material(category_name(o.category), category_color(o.category))).first;
    }
    const int mesh = b.mesh("object_" + std::to_string(o.instance_id), Json::array({b.primitive(o.mesh, mit->second)}));
    const auto t = to_gltf(o.translation);
    const double half = 0.5 * o.yaw;
    scene_nodes.push_back(b.node({{"name", "object_" + std::to_string(o.instance_id)},
                                  {"mesh", mesh},
                                  {"translation", t},
                                  {"rotation", {0.0, std::sin(half), 0.0, std::cos(half)}},
                                  {"scale", {o.scale.x, o.scale.z, o.scale.y}},
                                  {"extras", {{"category", category_name(o.category)}, {"asset_ref", o.mesh_ref}}}}));
  }

  // Scatter instances.
  std::map<std::string, int> kind_meshes;
  const Mesh marker = unit_marker();
  for (std::size_t k = 0; k < a.scatter.size(); ++k) {
    const auto& s = a.scatter[k];
    auto it = kind_meshes.find(s.asset_kind);
    if (it == kind_meshes.end()) {
      const auto color_it = lib.scatter_colors.find(s.asset_kind);
      const std::array<double, 3> rgb = color_it != lib.scatter_colors.end() ? color_it->second : category_color(s.category);
      const int mat = b.material("scatter_" + s.asset_kind, rgb);
      it = kind_meshes.emplace(s.asset_kind, b.mesh("scatter_" + s.asset_kind, Json::array({b.primitive(marker, mat)})))
               .first;
    }
    const double half = 0.5 * s.yaw;
    scene_nodes.push_back(b.node({{"name", "scatter_" + std::to_string(k)},
                                  {"mesh", it->second},
                                  {"translation", to_gltf(s.position)},
                                  {"rotation", {0.0, std::sin(half), 0.0, std::cos(half)}},
                                  {"scale", {s.scale, s.scale, s.scale}},
                                  {"extras", {{"asset_kind", s.asset_kind}}}}));
  }

  b.doc["scenes"] = Json::array({{{"nodes", scene_nodes}}});
  b.doc["scene"] = 0;
  return b.finish();
}

inline Json assembly_diagnostics(const AssembledScene& a) {
  Json objects = Json::array();
  for (const auto& d : a.objects.diagnostics) objects.push_back({{"instance_id", d.instance_id}, {"message", d.message}});
  std::map<std::string, int> per_kind;
  for (const auto& s : a.scatter) ++per_kind[s.asset_kind];
  return {{"object_count", a.objects.objects.size()},
          {"scatter_count", a.scatter.size()},
          {"scatter_per_kind", per_kind},
          {"terrain_triangles", a.terrain.triangle_count()},
          {"object_diagnostics", objects}};
}

// 16-bit heightmap: 0 and 65535 map to the min and max elevation recorded in
// heightmap.json.
inline Raster<std::uint16_t> quantize_heightmap(const Heightmap& h, double& lo, double& hi) {
  lo = h.min_elevation();
  hi = h.max_elevation();
  Raster<std::uint16_t> img(h.width(), h.height(), 1, 0);
  const double span = hi > lo ? hi - lo : 1.0;
  for (int j = 0; j < h.height(); ++j) {
    for (int i = 0; i < h.width(); ++i) {
      img.at(i, j) = static_cast<std::uint16_t>(std::lround((h.elevation(i, j) - lo) / span * 65535.0));
    }
  }
  return img;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Writes scene.glb, scene.json, heightmap.png (+ heightmap.json),
// splat_<k>.png, texture.png and diagnostics.json into `dir`. The GLB is
// checked structurally before anything is written.
inline GlbReport export_scene(const AssembledScene& a, const TextureTileLibrary& lib, const std::filesystem::path& dir,
                              Json extra_diagnostics = Json::object()) {
  if (!std::filesystem::is_directory(dir)) throw IoError("output directory '" + dir.string() + "' does not exist");
  const auto glb = build_glb(a, lib);
  GlbReport report = validate_glb(glb);
  if (!report.ok()) throw Error("export self-check failed: " + report.problems.front());
  const std::size_t expected_nodes = 1 + a.objects.objects.size() + a.scatter.size();
  if (report.node_count != expected_nodes) throw Error("export self-check failed: unexpected node count");

  detail::write_file_bytes(dir / "scene.glb", glb);
  write_text(dir / "scene.json", dump_json(scene_to_json(a.descriptor)));
  double lo = 0.0, hi = 0.0;
  write_png16(dir / "heightmap.png", quantize_heightmap(a.descriptor.terrain, lo, hi));
  write_text(dir / "heightmap.json", dump_json({{"min_elevation", lo},
                                                {"max_elevation", hi},
                                                {"cell_size", a.descriptor.terrain.cell_size},
                                                {"origin", {a.descriptor.terrain.origin_x, a.descriptor.terrain.origin_y}}}));
  const Splatmap& s = a.descriptor.splat;
  for (int k = 0; k < s.channel_count(); ++k) {
    Raster<std::uint8_t> img(s.width(), s.height(), 1, 0);
    for (int j = 0; j < s.height(); ++j) {
      for (int i = 0; i < s.width(); ++i) img.at(i, j) = to_byte(s.weights.at(i, j, k));
    }
    write_png8(dir / ("splat_" + std::to_string(k) + ".png"), img);
  }
  write_png8(dir / "texture.png", quantize_color(a.texture));
  Json diag = assembly_diagnostics(a);
  diag["glb"] = {{"nodes", report.node_count}, {"meshes", report.mesh_count}, {"triangles", report.triangle_count}};
  for (auto& [k, v] : extra_diagnostics.items()) diag[k] = v;
  write_text(dir / "diagnostics.json", dump_json(diag));
  return report;
}

}  // namespace isoscene
