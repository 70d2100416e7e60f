#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "isoscene/assembly.hpp"
#include "isoscene/diffusion.hpp"
#include "isoscene/error.hpp"
#include "isoscene/fixture.hpp"
#include "isoscene/frame_io.hpp"
#include "isoscene/gltf.hpp"
#include "isoscene/scene.hpp"
#include "isoscene/sketch.hpp"
#include "isoscene/understanding.hpp"

namespace isoscene {

struct DiffusionLabConfig {
  int schedule_T = 200;
  double alpha_bar_first = 0.9999;
  double alpha_bar_last = 1e-4;
  bool unroll = true;
  double unroll_start = 0.5;
  int samples = 10000;
  int fit_bins = 20;
  int train_rounds = 10;
  int train_steps = 200;
  int train_batch = 64;
  double target_mean = 3.0;
  double target_variance = 4.0;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int image_width = 512;
  int image_height = 512;
  double camera_margin = 0.08;
  FixtureConfig fixture;
  double sal_sigma = kDefaultSalSigma;
  DiffusionLabConfig diffusion;
  double bed_offset = kDefaultBedOffset;
  int feather_size = kSplatFeatherSize;
  double bev_cell_size = 1.0;
  std::string asset_manifest;  // empty: built-in palette library
  std::string out_dir;
};

// ---------------------------------------------------------------------------
// Config file (JSON). Unknown keys and wrong types are config errors.

namespace config_detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace config_detail

inline void validate_config(const PipelineConfig& c) {
  if (c.image_width < 16 || c.image_height < 16) throw ConfigError("camera: image must be at least 16x16");
  if (!(c.camera_margin >= 0.0 && c.camera_margin < 0.5)) throw ConfigError("camera.margin must lie in [0, 0.5)");
  if (c.fixture.grid_size < 16) throw ConfigError("fixture.grid_size must be at least 16");
  if (!(c.fixture.cell_size > 0.0)) throw ConfigError("fixture.cell_size must be positive");
  if (c.fixture.object_count > 64) throw ConfigError("fixture.object_count is too large");
  if (!(c.sal_sigma > 0.0)) throw ConfigError("sal_sigma must be positive");
  if (!(c.bed_offset >= 0.0)) throw ConfigError("understanding.bed_offset must be non-negative");
  if (c.feather_size < 1 || c.feather_size % 2 == 0) throw ConfigError("understanding.feather_size must be odd");
  if (!(c.bev_cell_size > 0.0)) throw ConfigError("understanding.cell_size must be positive");
  const auto& d = c.diffusion;
  if (d.schedule_T < 1) throw ConfigError("diffusion.schedule_T must be at least 1");
  if (!(d.unroll_start >= 0.0 && d.unroll_start <= 1.0)) throw ConfigError("diffusion.unroll_start must lie in [0, 1]");
  if (d.samples < 1) throw ConfigError("diffusion.samples must be positive");
  if (d.fit_bins < 1) throw ConfigError("diffusion.fit_bins must be positive");
  if (!(d.alpha_bar_first <= 1.0 && d.alpha_bar_last >= 0.0 && d.alpha_bar_last <= d.alpha_bar_first)) {
    throw ConfigError("diffusion: alpha_bar endpoints must satisfy 0 <= last <= first <= 1");
  }
  if (!(d.target_variance > 0.0)) throw ConfigError("diffusion.target_variance must be positive");
}

// Layers `j` over `c`.
inline void apply_config_json(PipelineConfig& c, const Json& j) {
  using config_detail::check_keys;
  using config_detail::read;
  check_keys(j, {"seed", "camera", "fixture", "sal_sigma", "diffusion", "understanding", "asset_manifest", "out"},
             "config");
  read(j, "seed", c.seed, "config");
  read(j, "sal_sigma", c.sal_sigma, "config");
  read(j, "asset_manifest", c.asset_manifest, "config");
  read(j, "out", c.out_dir, "config");
  if (j.contains("camera")) {
    const Json& cam = j["camera"];
    check_keys(cam, {"width", "height", "margin"}, "camera");
    read(cam, "width", c.image_width, "camera");
    read(cam, "height", c.image_height, "camera");
    read(cam, "margin", c.camera_margin, "camera");
  }
  if (j.contains("fixture")) {
    const Json& f = j["fixture"];
    check_keys(f,
               {"grid_size", "cell_size", "object_count", "min_objects", "max_objects", "bump_count", "water_probability",
                "water_bed_offset", "bank_slope", "object_size_min", "object_size_max", "object_height_min",
                "object_height_max", "rock_fraction", "road"},
               "fixture");
    auto& x = c.fixture;
    read(f, "grid_size", x.grid_size, "fixture");
    read(f, "cell_size", x.cell_size, "fixture");
    read(f, "object_count", x.object_count, "fixture");
    read(f, "min_objects", x.min_objects, "fixture");
    read(f, "max_objects", x.max_objects, "fixture");
    read(f, "bump_count", x.bump_count, "fixture");
    read(f, "water_probability", x.water_probability, "fixture");
    read(f, "water_bed_offset", x.water_bed_offset, "fixture");
    read(f, "bank_slope", x.bank_slope, "fixture");
    read(f, "object_size_min", x.object_size_min, "fixture");
    read(f, "object_size_max", x.object_size_max, "fixture");
    read(f, "object_height_min", x.object_height_min, "fixture");
    read(f, "object_height_max", x.object_height_max, "fixture");
    read(f, "rock_fraction", x.rock_fraction, "fixture");
    read(f, "road", x.road, "fixture");
  }
  if (j.contains("understanding")) {
    const Json& u = j["understanding"];
    check_keys(u, {"bed_offset", "feather_size", "cell_size"}, "understanding");
    read(u, "bed_offset", c.bed_offset, "understanding");
    read(u, "feather_size", c.feather_size, "understanding");
    read(u, "cell_size", c.bev_cell_size, "understanding");
  }
  if (j.contains("diffusion")) {
    const Json& d = j["diffusion"];
    check_keys(d,
               {"schedule_T", "alpha_bar_first", "alpha_bar_last", "unroll", "unroll_start", "samples", "fit_bins",
                "train_rounds", "train_steps", "train_batch", "target_mean", "target_variance"},
               "diffusion");
    auto& x = c.diffusion;
    read(d, "schedule_T", x.schedule_T, "diffusion");
    read(d, "alpha_bar_first", x.alpha_bar_first, "diffusion");
    read(d, "alpha_bar_last", x.alpha_bar_last, "diffusion");
    read(d, "unroll", x.unroll, "diffusion");
    read(d, "unroll_start", x.unroll_start, "diffusion");
    read(d, "samples", x.samples, "diffusion");
    read(d, "fit_bins", x.fit_bins, "diffusion");
    read(d, "train_rounds", x.train_rounds, "diffusion");
    read(d, "train_steps", x.train_steps, "diffusion");
    read(d, "train_batch", x.train_batch, "diffusion");
    read(d, "target_mean", x.target_mean, "diffusion");
    read(d, "target_variance", x.target_variance, "diffusion");
  }
}

inline void load_config_file(PipelineConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  apply_config_json(c, j);
}

inline Json config_to_json(const PipelineConfig& c) {
  const auto& f = c.fixture;
  const auto& d = c.diffusion;
  return {{"seed", c.seed},
          {"camera", {{"width", c.image_width}, {"height", c.image_height}, {"margin", c.camera_margin}}},
          {"fixture",
           {{"grid_size", f.grid_size},
            {"cell_size", f.cell_size},
            {"object_count", f.object_count},
            {"min_objects", f.min_objects},
            {"max_objects", f.max_objects},
            {"bump_count", f.bump_count},
            {"water_probability", f.water_probability},
            {"water_bed_offset", f.water_bed_offset},
            {"bank_slope", f.bank_slope},
            {"object_size_min", f.object_size_min},
            {"object_size_max", f.object_size_max},
            {"object_height_min", f.object_height_min},
            {"object_height_max", f.object_height_max},
            {"rock_fraction", f.rock_fraction},
            {"road", f.road}}},
          {"sal_sigma", c.sal_sigma},
          {"understanding", {{"bed_offset", c.bed_offset}, {"feather_size", c.feather_size}, {"cell_size", c.bev_cell_size}}},
          {"diffusion",
           {{"schedule_T", d.schedule_T},
            {"alpha_bar_first", d.alpha_bar_first},
            {"alpha_bar_last", d.alpha_bar_last},
            {"unroll", d.unroll},
            {"unroll_start", d.unroll_start},
            {"samples", d.samples},
            {"fit_bins", d.fit_bins},
            {"train_rounds", d.train_rounds},
            {"train_steps", d.train_steps},
            {"train_batch", d.train_batch},
            {"target_mean", d.target_mean},
            {"target_variance", d.target_variance}}},
          {"asset_manifest", c.asset_manifest}};
}

// ---------------------------------------------------------------------------
// Stages

// Raised by the pipeline with the failing stage's name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline void require_directory(const std::filesystem::path& dir) {
  if (dir.empty() || !std::filesystem::is_directory(dir)) {
    throw IoError("output directory '" + dir.string() + "' does not exist");
  }
}

inline TextureTileLibrary library_for(const PipelineConfig& c) {
  return c.asset_manifest.empty() ? default_library() : load_library(c.asset_manifest);
}

struct FixtureOutputs {
  SceneDescriptor truth;
  IsometricFrame frame;
};

inline FixtureOutputs run_fixture(const PipelineConfig& c, const std::filesystem::path& dir) {
  require_directory(dir);
  FixtureOutputs out;
  out.truth = generate_random_scene(c.seed, c.fixture);
  const IsometricCamera cam = fit_camera(out.truth, c.image_width, c.image_height, c.camera_margin);
  out.truth.camera = cam;
  out.frame = render_isometric(out.truth, cam);
  write_frame(dir, out.frame);
  write_fixture_extras(dir, out.truth, render_bev(out.truth), out.frame);
  return out;
}

inline UnderstandingConfig understanding_config(const PipelineConfig& c, const TextureTileLibrary& lib) {
  UnderstandingConfig u;
  u.grid.cell_size = c.bev_cell_size;
  u.bed_offset = c.bed_offset;
  u.feather_size = c.feather_size;
  for (const auto& [cat, mesh] : lib.meshes) u.assets[category_name(cat)] = mesh;
  return u;
}

inline SceneDescriptor scene_from_understanding(const UnderstandingResult& r, const IsometricFrame& frame,
                                                const TextureTileLibrary& lib, std::uint64_t seed) {
  SceneDescriptor s;
  s.terrain = r.heightmap;
  s.water_regions = r.water_regions;
  s.objects = r.placements.placements;
  s.splat = r.splat;
  for (auto c : s.splat.channel_categories) s.texture_assignments[category_name(c)] = lib.tile_for(c).id;
  s.rng_seed = seed;
  s.camera = frame.camera;
  return s;
}

struct UnderstandOutputs {
  UnderstandingResult result;
  SceneDescriptor scene;
};

inline UnderstandOutputs run_understand(const PipelineConfig& c, const IsometricFrame& frame,
                                        const std::filesystem::path& dir) {
  require_directory(dir);
  const TextureTileLibrary lib = library_for(c);
  UnderstandOutputs out;
  out.result = run_understanding(frame, understanding_config(c, lib));
  out.scene = scene_from_understanding(out.result, frame, lib, c.seed);
  write_understanding(dir, out.result, out.scene);
  return out;
}

inline SceneDescriptor read_scene_file(const std::filesystem::path& where) {
  const auto path = std::filesystem::is_directory(where) ? where / "scene.json" : where;
  const Json j = read_json_file(path);
  try {
    return scene_from_json(j);
  } catch (const Json::exception& e) {
    throw ParseError("scene '" + path.string() + "': " + e.what());
  }
}

inline GlbReport run_assemble(const PipelineConfig& c, const SceneDescriptor& scene, const std::filesystem::path& dir) {
  require_directory(dir);
  const TextureTileLibrary lib = library_for(c);
  SceneDescriptor s = scene;
  s.rng_seed = c.seed;
  const AssembledScene a = assemble_scene(s, lib, c.seed);
  return export_scene(a, lib, dir);
}

struct PipelineOutputs {
  GlbReport report;
  std::size_t placements = 0;
};

// fixture (unless a frame is given) -> understand -> assemble, each stage in a
// subdirectory of `dir`. Stage failures carry the stage name.
inline PipelineOutputs run_pipeline(const PipelineConfig& c, const std::filesystem::path& dir,
                                    const std::optional<std::filesystem::path>& frame_path = {}) {
  require_directory(dir);
  IsometricFrame frame;
  try {
    if (frame_path) {
      frame = read_frame(*frame_path);
    } else {
      std::filesystem::create_directories(dir / "fixture");
      run_fixture(c, dir / "fixture");
      // Continue from the files so the result matches running the stages one by one.
      frame = read_frame(dir / "fixture");
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("fixture", e.what());
  }
  PipelineOutputs out;
  SceneDescriptor scene;
  try {
    std::filesystem::create_directories(dir / "understand");
    scene = run_understand(c, frame, dir / "understand").scene;
    out.placements = scene.objects.size();
  } catch (const std::exception& e) {
    throw StageError("understand", e.what());
  }
  try {
    std::filesystem::create_directories(dir / "assemble");
    out.report = run_assemble(c, scene, dir / "assemble");
  } catch (const std::exception& e) {
    throw StageError("assemble", e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diffusion lab

inline Json run_diffusion_lab(const PipelineConfig& c, const std::optional<SketchMap>& sketch = {}) {
  const auto& d = c.diffusion;
  const DiffusionSchedule schedule = DiffusionSchedule::linear(d.schedule_T, d.alpha_bar_first, d.alpha_bar_last);
  Json metrics;
  metrics["schedule"] = {{"T", d.schedule_T},
                         {"alpha_bar_first", schedule.alpha_bar(0)},
                         {"alpha_bar_last", schedule.alpha_bar(schedule.steps() - 1)}};

  // Linear predictor fitted on N(0, 1) data against its analytic coefficients.
  std::mt19937_64 data_rng(derive_seed(c.seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> standard(static_cast<std::size_t>(d.samples));
  for (auto& v : standard) v = normal(data_rng);
  LinearFitOptions fo;
  fo.t_bins = std::min(d.fit_bins, d.schedule_T);
  fo.samples_per_bin = static_cast<std::size_t>(std::max(d.samples, 2));
  fo.seed = derive_seed(c.seed, 2);
  const LinearPredictor fitted = fit_linear_predictor(standard, schedule, fo);
  Json bins = Json::array();
  double max_da = 0.0, max_db = 0.0;
  for (const auto& b : fitted.bins) {
    // Pooled over the bin, x_t ~ N(0, 1) at every step, so the optimal slope
    // is the bin mean of sqrt(1 - alpha_bar).
    double ref = 0.0;
    for (int t = b.t_begin; t < b.t_end; ++t) ref += std::sqrt(1.0 - schedule.alpha_bar(t));
    ref /= (b.t_end - b.t_begin);
    max_da = std::max(max_da, std::abs(b.a - ref));
    max_db = std::max(max_db, std::abs(b.b));
    bins.push_back({{"t_begin", b.t_begin}, {"t_end", b.t_end}, {"a", b.a}, {"b", b.b}, {"analytic_a", ref}, {"analytic_b", 0.0}});
  }
  metrics["linear_fit"] = {{"bins", bins}, {"max_abs_error_a", max_da}, {"max_abs_error_b", max_db}};

  // Training loop with optional unrolled steps.
  SudTrainOptions to;
  to.rounds = d.train_rounds;
  to.steps_per_round = d.train_steps;
  to.batch = d.train_batch;
  to.t_bins = std::min(d.fit_bins, d.schedule_T);
  to.unroll = d.unroll;
  to.unroll_start = d.unroll_start;
  to.seed = derive_seed(c.seed, 3);
  if (to.unroll && (schedule.alpha_bar(0) >= 1.0 || schedule.alpha_bar(schedule.steps() - 1) <= 0.0)) {
    throw ConfigError("diffusion: unrolled training needs alpha_bar strictly inside (0, 1)");
  }
  const SudTrainResult trained = train_linear_with_sud(standard, schedule, to);
  metrics["training"] = {{"unroll", d.unroll},
                         {"unroll_start", d.unroll_start},
                         {"loss_curve", trained.loss_curve},
                         {"round_unrolled", trained.round_unrolled},
                         {"final_loss", trained.final_loss}};

  // Ancestral sampling toward N(target_mean, target_variance).
  const auto predictor = analytic_gaussian_predictor(d.target_mean, d.target_variance, schedule);
  const auto xs = ancestral_sample(predictor, schedule, derive_seed(c.seed, 4), d.samples);
  double mean = 0.0, var = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() > 1 ? xs.size() - 1 : 1);
  metrics["sampling"] = {{"samples", d.samples},
                         {"target_mean", d.target_mean},
                         {"target_variance", d.target_variance},
                         {"mean", mean},
                         {"variance", var}};

  if (sketch) {
    const RealGrid w = sal_weights(*sketch, c.sal_sigma);
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (double v : w.storage()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    metrics["sal"] = {{"sigma", c.sal_sigma},
                      {"categories", sketch->category_names},
                      {"support_fraction", static_cast<double>(count_set(channel_max(*sketch))) / w.size()},
                      {"weight_min", lo},
                      {"weight_max", hi},
                      {"weight_mean", sum / static_cast<double>(w.size())}};
  }
  return metrics;
}

}  // namespace isoscene
