#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "isoscene/pipeline.hpp"

namespace fs = std::filesystem;
using namespace isoscene;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("isoscene_accept_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Sample normal_sample(int w, int h, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Sample s(w, h, c);
  for (auto& v : s.storage()) v = n(rng);
  return s;
}

Mask bernoulli_mask(int w, int h, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution on(p);
  Mask m(w, h, 1, 0);
  for (auto& v : m.storage()) v = on(rng) ? 1 : 0;
  return m;
}

SketchMap random_sketch(int w, int h, int n, double p, std::mt19937_64& rng) {
  SketchMap s;
  s.channels = Raster<std::uint8_t>(w, h, n, 0);
  for (int c = 0; c < n; ++c) s.category_names.push_back("c" + std::to_string(c));
  std::bernoulli_distribution on(p);
  for (auto& v : s.channels.storage()) v = on(rng) ? 1 : 0;
  return s;
}

EpsilonPredictor random_predictor(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double a = u(rng), b = u(rng), c = u(rng);
  return [a, b, c](const PredictorInput& in) {
    Sample out(in.noisy.width(), in.noisy.height(), in.noisy.channels());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * std::tanh(b * in.noisy[i]) + c * 0.01 * in.t;
    return out;
  };
}

BevGridSpec truth_grid(const Heightmap& h) {
  BevGridSpec g;
  g.cell_size = h.cell_size;
  g.origin_x = h.origin_x;
  g.origin_y = h.origin_y;
  g.width = h.width();
  g.height = h.height();
  return g;
}

IsometricFrame render_fixture(SceneDescriptor& scene, int size) {
  const auto cam = fit_camera(scene, size, size);
  scene.camera = cam;
  return render_isometric(scene, cam);
}

double heightmap_rmse_ratio(const SceneDescriptor& scene, const Heightmap& got) {
  const auto bev = render_bev(scene);
  double lo = 1e300, hi = -1e300, se = 0.0;
  for (int j = 0; j < got.height(); ++j) {
    for (int i = 0; i < got.width(); ++i) {
      const double t = bev.height.at(i, j);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
      se += (got.elevation(i, j) - t) * (got.elevation(i, j) - t);
    }
  }
  const double rmse = std::sqrt(se / static_cast<double>(got.values.size()));
  return hi > lo ? rmse / (hi - lo) : rmse;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return files;
}

// 1. Isometric axioms.
Outcome isometric_axioms() {
  Outcome o;
  IsometricCamera cam;
  const Vec2 origin = project({0, 0, 0}, cam);
  const Vec2 ax[3] = {project({1, 0, 0}, cam) - origin, project({0, 1, 0}, cam) - origin,
                      project({0, 0, 1}, cam) - origin};
  double len_err = 0.0, ang_err = 0.0;
  for (int i = 0; i < 3; ++i) {
    len_err = std::max(len_err, std::abs(norm(ax[i]) - norm(ax[0])));
    const Vec2 a = ax[i], b = ax[(i + 1) % 3];
    const double ang = std::acos(std::clamp(dot(a, b) / (norm(a) * norm(b)), -1.0, 1.0));
    ang_err = std::max(ang_err, std::abs(ang - 2.0 * std::numbers::pi / 3.0));
  }
  o.require(len_err <= 1e-9, fmt("axis length spread %.3g", len_err));
  o.require(ang_err <= 1e-9, fmt("angle error %.3g rad", ang_err));
  const auto rect = ground_rectify_map(cam);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  double rt = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec2 g{u(rng), u(rng)};
    const Vec2 p{u(rng), u(rng)};
    rt = std::max(rt, norm(rect.rectify(rect.unrectify(g)) - g));
    rt = std::max(rt, norm(rect.unrectify(rect.rectify(p)) - p));
  }
  o.require(rt <= 1e-9, fmt("rectify round trip %.3g", rt));
  o.detail = o.pass ? fmt("axis spread %.2g, angle err %.2g, round trip %.2g", len_err, ang_err, rt) : o.detail;
  return o;
}

// 2. Round-trip layout recovery over 50 fixtures.
Outcome layout_recovery() {
  Outcome o;
  const auto t0 = Clock::now();
  FixtureConfig cfg;
  double iou_sum = 0.0, worst_center = 0.0, worst_height_excess = -1e300;
  std::size_t objects = 0, missing = 0, height_failures = 0, center_failures = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto scene = generate_random_scene(seed, cfg);
    const auto frame = render_fixture(scene, 512);
    UnderstandingConfig uc;
    uc.grid = truth_grid(scene.terrain);
    const auto r = run_understanding(frame, uc);
    const double px_height = 1.0 / height_pixels_per_unit(frame.camera);
    for (const auto& truth : scene.objects) {
      ++objects;
      const auto it = std::find_if(r.placements.placements.begin(), r.placements.placements.end(),
                                   [&](const ObjectPlacement& p) { return p.instance_id == truth.instance_id; });
      if (it == r.placements.placements.end()) {
        ++missing;
        continue;
      }
      iou_sum += footprint_iou(it->footprint, truth.footprint);
      const double tol = std::max(0.05 * truth.height, px_height);
      const double err = std::abs(it->height - truth.height);
      worst_height_excess = std::max(worst_height_excess, err - tol);
      if (err > tol) ++height_failures;
      const double dc = norm(it->footprint.center() - truth.footprint.center());
      worst_center = std::max(worst_center, dc);
      if (dc > scene.terrain.cell_size) ++center_failures;
    }
  }
  const double mean_iou = objects ? iou_sum / static_cast<double>(objects) : 0.0;
  const double elapsed = seconds_since(t0);
  o.require(missing == 0, fmt("%.0f objects without placement", static_cast<double>(missing)));
  o.require(mean_iou >= 0.8, fmt("mean IoU %.3f", mean_iou));
  o.require(height_failures == 0, fmt("%.0f height errors over tolerance (worst excess %.3f m)",
                                      static_cast<double>(height_failures), worst_height_excess));
  o.require(center_failures == 0, fmt("%.0f centers off by > 1 cell (worst %.3f)", static_cast<double>(center_failures),
                                      worst_center));
  o.require(elapsed < 300.0, fmt("runtime %.1f s", elapsed));
  if (o.pass) {
    o.detail = fmt("%.0f objects, mean IoU %.3f, worst center err %.3f cells, %.1f s", static_cast<double>(objects),
                   mean_iou, worst_center, elapsed);
  }
  return o;
}

// 3. Heightmap fidelity.
Outcome heightmap_fidelity() {
  Outcome o;
  FixtureConfig bare;
  bare.object_count = 0;
  double worst_bare = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto scene = generate_random_scene(seed, bare);
    const auto frame = render_fixture(scene, 512);
    UnderstandingConfig uc;
    uc.grid = truth_grid(scene.terrain);
    worst_bare = std::max(worst_bare, heightmap_rmse_ratio(scene, run_understanding(frame, uc).heightmap));
  }
  FixtureConfig busy;
  double worst_busy = 0.0;
  int counted = 0;
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    auto scene = generate_random_scene(seed, busy);
    const auto frame = render_fixture(scene, 512);
    const std::size_t fg = count_set(union_of_instances(frame));
    const std::size_t visible = count_set(frame.depth.valid);
    if (visible == 0 || static_cast<double>(fg) / static_cast<double>(visible) > 0.3) continue;
    UnderstandingConfig uc;
    uc.grid = truth_grid(scene.terrain);
    worst_busy = std::max(worst_busy, heightmap_rmse_ratio(scene, run_understanding(frame, uc).heightmap));
    ++counted;
  }
  o.require(worst_bare <= 0.02, fmt("object-free RMSE %.2f%% of range", 100 * worst_bare));
  o.require(counted > 0, "no fixture with occlusion <= 30%");
  o.require(worst_busy <= 0.05, fmt("occluded RMSE %.2f%% of range", 100 * worst_busy));
  if (o.pass) {
    o.detail = fmt("worst RMSE %.2f%% object-free (20), %.2f%% with objects (%.0f)", 100 * worst_bare, 100 * worst_busy,
                   counted);
  }
  return o;
}

// 4. Sketch-aware loss.
Outcome sal_suite() {
  Outcome o;
  std::mt19937_64 rng(4);
  const auto empty = random_sketch(64, 64, 3, 0.0, rng);
  const auto full = random_sketch(64, 64, 3, 1.0, rng);
  const auto we = sal_weights(empty), wf = sal_weights(full);
  bool exact_floor = true;
  double full_err = 0.0;
  for (double v : we.storage()) exact_floor = exact_floor && v == 0.1;
  for (double v : wf.storage()) full_err = std::max(full_err, std::abs(v - 1.0));
  o.require(exact_floor, "empty sketch weights differ from 0.1");
  o.require(full_err <= 1e-6, fmt("full sketch weight error %.3g", full_err));
  RealGrid a(32, 32, 4), b(32, 32, 4);
  std::normal_distribution<double> n;
  for (auto& v : a.storage()) v = n(rng);
  for (auto& v : b.storage()) v = n(rng);
  o.require(sal_loss(a, b, RealGrid(32, 32, 1, 1.0)) == plain_mse(a, b), "unit-weight loss differs from MSE");
  std::size_t violations = 0;
  for (int k = 0; k < 100; ++k) {
    const auto s = random_sketch(40, 40, 2, 0.03, rng);
    auto t = s;
    std::bernoulli_distribution on(0.03);
    for (auto& v : t.channels.storage()) v = (v || on(rng)) ? 1 : 0;
    const auto ws = sal_weights(s), wt = sal_weights(t);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      if (ws[i] > wt[i] + 1e-15 || ws[i] < 0.1 || ws[i] > 1.0 + 1e-12) ++violations;
    }
  }
  o.require(violations == 0, fmt("%.0f monotonicity violations", static_cast<double>(violations)));
  if (o.pass) o.detail = fmt("floor exact, full err %.2g, 100 monotone pairs", full_err);
  return o;
}

// 5. Unrolled-step identities.
Outcome unrolled_identities() {
  Outcome o;
  const auto schedule = DiffusionSchedule::linear(100);
  std::mt19937_64 rng(5);
  double perfect_err = 0.0, relation_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Sample x0 = normal_sample(6, 5, 2, rng);
    const Mask bg(6, 5, 1, 1);
    const EpsilonPredictor oracle = [&](const PredictorInput& in) {
      const double ab = schedule.alpha_bar(in.t);
      Sample out(x0.width(), x0.height(), x0.channels());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = (in.noisy[i] - std::sqrt(ab) * x0[i]) / std::sqrt(1 - ab);
      return out;
    };
    const auto first = random_predictor(static_cast<std::uint64_t>(k) + 17);
    SudStepOptions perfect;
    perfect.unroll = true;
    perfect.first_pass = &oracle;
    const auto rp = sud_training_step(first, x0, bg, {}, static_cast<std::uint64_t>(k), schedule, perfect);
    for (std::size_t i = 0; i < x0.size(); ++i) perfect_err = std::max(perfect_err, std::abs(rp.diag.eps_bar[i] - rp.diag.eps[i]));
    SudStepOptions any;
    any.unroll = true;
    any.first_pass = &first;
    const auto r = sud_training_step(oracle, x0, bg, {}, static_cast<std::uint64_t>(k) + 5000, schedule, any);
    const double ratio = std::sqrt(r.diag.alpha_bar / (1.0 - r.diag.alpha_bar));
    for (std::size_t i = 0; i < x0.size(); ++i) {
      relation_err = std::max(relation_err,
                              std::abs(r.diag.eps_bar[i] - (r.diag.eps[i] + ratio * (r.diag.x_pred_hat[i] - x0[i]))));
    }
  }
  o.require(perfect_err <= 1e-9, fmt("perfect first pass error %.3g", perfect_err));
  o.require(relation_err <= 1e-9, fmt("closed-form relation error %.3g", relation_err));
  int raised = 0;
  for (double ab : {0.0, 1.0}) {
    SudStepOptions opts;
    opts.unroll = true;
    try {
      sud_training_step(random_predictor(1), Sample(4, 4, 1, 0.5), Mask(4, 4, 1, 1), {}, 1,
                        DiffusionSchedule::from_alpha_bar({ab}), opts);
    } catch (const Error&) {
      ++raised;
    }
  }
  o.require(raised == 2, "degenerate schedule not rejected");
  if (o.pass) o.detail = fmt("perfect err %.2g, relation err %.2g over 1000 draws", perfect_err, relation_err);
  return o;
}

// 6. Diffusion oracle equivalence.
Outcome diffusion_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto schedule = DiffusionSchedule::linear(200);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  std::vector<double> data(100000);
  for (auto& v : data) v = n(rng);
  LinearFitOptions fo;
  fo.t_bins = schedule.steps();
  fo.samples_per_bin = 100000;
  fo.seed = 6;
  fo.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto p = fit_linear_predictor(data, schedule, fo);
  double da = 0.0, db = 0.0;
  for (const auto& b : p.bins) {
    da = std::max(da, std::abs(b.a - std::sqrt(1.0 - schedule.alpha_bar(b.t_begin))));
    db = std::max(db, std::abs(b.b));
  }
  o.require(da <= 1e-2, fmt("max |a - analytic| %.4f", da));
  o.require(db <= 1e-2, fmt("max |b| %.4f", db));
  const auto xs = ancestral_sample(analytic_gaussian_predictor(3.0, 4.0, schedule), schedule, 6, 10000);
  double mean = 0.0, var = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  o.require(std::abs(mean - 3.0) <= 0.1, fmt("sample mean %.4f", mean));
  o.require(std::abs(var - 4.0) <= 0.3, fmt("sample variance %.4f", var));
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 120.0, fmt("runtime %.1f s", elapsed));
  if (o.pass) {
    o.detail = fmt("max |da| %.4f, max |db| %.4f, mean %.3f, var %.3f", da, db, mean, var);
  }
  return o;
}

// 7. Partial-loss reduction and mask construction.
Outcome partial_loss_reduction() {
  Outcome o;
  const auto schedule = DiffusionSchedule::linear(50);
  std::mt19937_64 rng(7);
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    InpaintSample s{normal_sample(8, 6, 3, rng), Mask(8, 6, 1, 1), {}};
    const Sample eps = normal_sample(8, 6, 3, rng);
    const auto pred = random_predictor(static_cast<std::uint64_t>(k));
    const int t = k % schedule.steps();
    if (partial_loss(pred, s, t, eps, schedule) != full_loss(pred, s, t, eps, schedule)) ++mismatches;
  }
  o.require(mismatches == 0, fmt("%.0f loss mismatches", static_cast<double>(mismatches)));
  int mask_errors = 0;
  for (int k = 0; k < 1000; ++k) {
    const Mask a = bernoulli_mask(13, 9, 0.5, rng), b = bernoulli_mask(13, 9, 0.5, rng), c = bernoulli_mask(13, 9, 0.5, rng);
    const Mask m = make_training_mask(a, b, c);
    for (std::size_t i = 0; i < m.size(); ++i) mask_errors += m[i] != (a[i] && b[i] && c[i]);
  }
  o.require(mask_errors == 0, fmt("%.0f mask pixel errors", static_cast<double>(mask_errors)));
  if (o.pass) o.detail = "200 loss pairs bit-identical, 1000 mask triples exact";
  return o;
}

// 8. Splatmap simplex and texture compositing.
Outcome splat_texture() {
  Outcome o;
  FixtureConfig cfg;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto scene = generate_random_scene(seed, cfg);
    const auto frame = render_fixture(scene, 256);
    const auto r = run_understanding(frame, UnderstandingConfig{});
    for (const Splatmap* s : std::vector<const Splatmap*>{&scene.splat, &r.splat}) {
      for (int y = 0; y < s->height(); ++y) {
        for (int x = 0; x < s->width(); ++x) {
          double sum = 0.0;
          for (int k = 0; k < s->channel_count(); ++k) sum += s->weights.at(x, y, k);
          worst = std::max(worst, std::abs(sum - 1.0));
        }
      }
    }
  }
  o.require(worst <= 1e-6, fmt("simplex error %.3g", worst));

  TextureTileLibrary lib;
  TextureTile pattern{"pattern", RealGrid(8, 8, 3, 0.0)};
  for (std::size_t i = 0; i < pattern.image.size(); ++i) pattern.image[i] = static_cast<double>((i * 37) % 101) / 100.0;
  lib.tiles[Category::kGrass].push_back(pattern);
  lib.tiles[Category::kRock].push_back(constant_tile("rock", {0.9, 0.2, 0.5}));
  Splatmap one_hot;
  one_hot.channel_categories = {Category::kGrass, Category::kRock};
  one_hot.weights = RealGrid(9, 9, 2, 0.0);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) one_hot.weights.at(x, y, 0) = 1.0;
  }
  const Heightmap grid(9, 9, 1.0, 0.0, 0.0);
  const auto tex = composite_texture(one_hot, grid, lib, 65, 65);
  bool exact = true;
  for (int v = 0; v < 65; ++v) {
    for (int u = 0; u < 65; ++u) {
      const auto rgb = tiled_color(pattern, lib.tile_world_size, texture_pixel_world(grid, u, v, 65, 65));
      for (int c = 0; c < 3; ++c) exact = exact && tex.at(u, v, c) == rgb[static_cast<std::size_t>(c)];
    }
  }
  o.require(exact, "one-hot texture differs from tile");

  lib.tiles[Category::kGrass] = {constant_tile("grass", {0.1, 0.7, 0.3})};
  Splatmap half = one_hot;
  for (auto& v : half.weights.storage()) v = 0.5;
  const auto blend = quantize_color(composite_texture(half, grid, lib, 65, 65));
  double blend_err = 0.0;
  const double avg[3] = {127.5 * (0.1 + 0.9), 127.5 * (0.7 + 0.2), 127.5 * (0.3 + 0.5)};
  for (int v = 0; v < 65; ++v) {
    for (int u = 0; u < 65; ++u) {
      for (int c = 0; c < 3; ++c) blend_err = std::max(blend_err, std::abs(blend.at(u, v, c) - avg[c]));
    }
  }
  o.require(blend_err <= 1.0, fmt("blend error %.2f quantization steps", blend_err));
  if (o.pass) o.detail = fmt("simplex err %.2g on 40 splatmaps, one-hot exact, blend err %.2f steps", worst, blend_err);
  return o;
}

// 9. Export integrity.
Outcome export_integrity() {
  Outcome o;
  FixtureConfig cfg;
  cfg.water_probability = 0.7;
  const auto lib = default_library();
  int invalid = 0, differing = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto truth = generate_random_scene(seed, cfg);
    const auto frame = render_fixture(truth, 256);
    const auto r = run_understanding(frame, UnderstandingConfig{});
    const auto recovered = scene_from_understanding(r, frame, lib, seed);
    for (const SceneDescriptor* s : std::vector<const SceneDescriptor*>{&truth, &recovered}) {
      const auto a = build_glb(assemble_scene(*s, lib, seed), lib);
      const auto b = build_glb(assemble_scene(*s, lib, seed), lib);
      if (!validate_glb(a).ok()) ++invalid;
      if (a != b) ++differing;
    }
  }
  o.require(invalid == 0, fmt("%.0f invalid GLBs", invalid));
  o.require(differing == 0, fmt("%.0f non-identical repeats", differing));

  TextureTileLibrary dense;
  dense.scatter_rules = {{Category::kGrass, {"tuft"}, 0.1}};
  SceneDescriptor flat;
  flat.terrain = Heightmap(101, 101, 1.0, 0.0, 0.0);
  flat.splat.channel_categories = terrain_categories();
  flat.splat.weights = RealGrid(101, 101, static_cast<int>(flat.splat.channel_categories.size()), 0.0);
  for (int j = 0; j < 101; ++j) {
    for (int i = 0; i < 101; ++i) flat.splat.weights.at(i, j, 0) = 1.0;
  }
  const double expected = 0.1 * flat.terrain.extent_x() * flat.terrain.extent_y();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double n = static_cast<double>(scatter_vegetation(flat.splat, flat.terrain, dense, seed).size());
    worst = std::max(worst, std::abs(n - expected) / expected);
  }
  o.require(worst <= 0.1, fmt("scatter count off by %.1f%%", 100 * worst));
  if (o.pass) o.detail = fmt("20 GLBs valid and repeatable, worst scatter deviation %.1f%%", 100 * worst);
  return o;
}

// 10. Determinism and budget of the full pipeline.
Outcome pipeline_determinism() {
  Outcome o;
  PipelineConfig c;
  c.seed = 10;
  const auto a = fresh_dir("pipe_a"), b = fresh_dir("pipe_b");
  const auto t0 = Clock::now();
  run_pipeline(c, a);
  const double elapsed = seconds_since(t0);
  run_pipeline(c, b);
  const auto ta = tree(a), tb = tree(b);
  o.require(ta.count("assemble/scene.json") == 1, "no scene.json");
  o.require(ta == tb, "outputs differ between runs");
  o.require(elapsed < 60.0, fmt("runtime %.1f s", elapsed));
  if (o.pass) o.detail = fmt("%.0f files identical, 512x512 run %.2f s", static_cast<double>(ta.size()), elapsed);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"isometric axioms", isometric_axioms},
      {"round-trip layout recovery", layout_recovery},
      {"heightmap fidelity", heightmap_fidelity},
      {"sketch-aware loss", sal_suite},
      {"unrolled-step identities", unrolled_identities},
      {"diffusion oracle equivalence", diffusion_oracles},
      {"partial-loss reduction", partial_loss_reduction},
      {"splatmap and texture", splat_texture},
      {"export integrity", export_integrity},
      {"pipeline determinism and budget", pipeline_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %zu [%s]: %s - %s\n", k + 1, criteria[k].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
