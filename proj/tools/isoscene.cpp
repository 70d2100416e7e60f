#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "isoscene/pipeline.hpp"

namespace fs = std::filesystem;
using namespace isoscene;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitParse = 3;
constexpr int kExitStage = 4;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> object_count;
  std::optional<double> sal_sigma;
  std::string manifest;
  std::optional<int> schedule_T;
  std::optional<bool> unroll;
  std::optional<double> unroll_start;
  std::optional<int> samples;
};

// Defaults, then the config file, then flags.
PipelineConfig resolve(const Overrides& o) {
  PipelineConfig c;
  if (!o.config_path.empty()) load_config_file(c, o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.object_count) c.fixture.object_count = *o.object_count;
  if (o.sal_sigma) c.sal_sigma = *o.sal_sigma;
  if (!o.manifest.empty()) c.asset_manifest = o.manifest;
  if (o.schedule_T) c.diffusion.schedule_T = *o.schedule_T;
  if (o.unroll) c.diffusion.unroll = *o.unroll;
  if (o.unroll_start) c.diffusion.unroll_start = *o.unroll_start;
  if (o.samples) c.diffusion.samples = *o.samples;
  validate_config(c);
  if (!c.asset_manifest.empty() && !fs::is_regular_file(c.asset_manifest)) {
    throw ConfigError("asset manifest '" + c.asset_manifest + "' does not exist");
  }
  return c;
}

fs::path output_dir(const PipelineConfig& c) {
  if (c.out_dir.empty()) throw ConfigError("no output directory given (--out)");
  if (!fs::is_directory(c.out_dir)) throw ConfigError("output directory '" + c.out_dir + "' does not exist");
  return c.out_dir;
}

void require_input(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw ParseError(std::string(what) + " '" + path + "' does not exist");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isometric image to 3D scene pipeline and diffusion lab"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "JSON config file");
  app.add_option("--seed", o.seed, "Seed");
  app.add_option("--out", o.out, "Existing output directory");

  auto* fixture = app.add_subcommand("fixture", "Generate a synthetic scene and render its isometric frame");
  fixture->add_option("--object-count", o.object_count, "Exact number of objects");

  std::string frame_path;
  auto* understand = app.add_subcommand("understand", "Extract heightmap, splatmap and placements from a frame");
  understand->add_option("--frame", frame_path, "Frame directory or frame.json")->required();
  understand->add_option("--manifest", o.manifest, "Asset manifest");

  std::string scene_path;
  auto* assemble = app.add_subcommand("assemble", "Build the 3D scene bundle from understanding outputs");
  assemble->add_option("--scene", scene_path, "Understanding directory or scene.json")->required();
  assemble->add_option("--manifest", o.manifest, "Asset manifest");

  auto* pipeline = app.add_subcommand("pipeline", "Run fixture, understand and assemble in sequence");
  pipeline->add_option("--frame", frame_path, "External frame; skips the fixture stage");
  pipeline->add_option("--manifest", o.manifest, "Asset manifest");
  pipeline->add_option("--object-count", o.object_count, "Exact number of fixture objects");

  std::string sketch_path;
  auto* lab = app.add_subcommand("diffusion-lab", "Diffusion schedule, training and sampling experiments");
  lab->add_option("--schedule-T", o.schedule_T, "Number of diffusion steps");
  bool unroll = true;
  auto* unroll_opt = lab->add_flag("--unroll,!--no-unroll", unroll, "Unrolled training (--unroll=false disables)");
  lab->add_option("--unroll-start", o.unroll_start, "Fraction of rounds before unrolling starts");
  lab->add_option("--samples", o.samples, "Samples for fitting and sampling");
  lab->add_option("--sketch", sketch_path, "Sketch manifest for SAL weight statistics");
  lab->add_option("--sal-sigma", o.sal_sigma, "SAL Gaussian sigma");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (unroll_opt->count() > 0) o.unroll = unroll;

  try {
    const PipelineConfig c = resolve(o);
    if (fixture->parsed()) {
      const auto out = run_fixture(c, output_dir(c));
      std::cout << "fixture: " << out.frame.instances.size() << " instances\n";
    } else if (understand->parsed()) {
      const fs::path dir = output_dir(c);
      require_input(frame_path, "frame");
      const IsometricFrame frame = read_frame(frame_path);
      const auto out = run_understand(c, frame, dir);
      std::cout << "understand: " << out.scene.objects.size() << " placements, "
                << out.result.placements.diagnostics.size() << " instance failures\n";
    } else if (assemble->parsed()) {
      const fs::path dir = output_dir(c);
      require_input(scene_path, "scene");
      const SceneDescriptor scene = read_scene_file(scene_path);
      const GlbReport r = run_assemble(c, scene, dir);
      std::cout << "assemble: " << r.node_count << " nodes, " << r.triangle_count << " triangles\n";
    } else if (pipeline->parsed()) {
      const fs::path dir = output_dir(c);
      std::optional<fs::path> frame;
      if (!frame_path.empty()) {
        require_input(frame_path, "frame");
        frame = frame_path;
      }
      const auto out = run_pipeline(c, dir, frame);
      std::cout << "pipeline: " << out.placements << " placements, " << out.report.node_count << " nodes\n";
    } else if (lab->parsed()) {
      std::optional<SketchMap> sketch;
      if (!sketch_path.empty()) sketch = read_sketch(sketch_path);
      const std::string text = run_diffusion_lab(c, sketch).dump(2) + "\n";
      if (c.out_dir.empty()) {
        std::cout << text;
      } else {
        write_text(output_dir(c) / "metrics.json", text);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const StageError& e) {
    std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
