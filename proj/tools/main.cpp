#include "pseudolabel/commands.hpp"
#include "pseudolabel/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <utility>

using namespace pseudolabel;

namespace {

// Pipeline flags are recorded as config entries so that the config file and
// the command line share one parser; flags are applied after the file.
struct PipelineFlags {
  KeyValueList overrides;
  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_file, "key = value config file (flags take precedence)");
    app.add_option("--seed", seed, "RANSAC seed (overridden by --ransac-seed)");
    const std::pair<const char*, const char*> valued[] = {
        {"ransac-iters", "RANSAC iterations"},
        {"ransac-thresh", "RANSAC inlier distance (m)"},
        {"ransac-seed", "RANSAC seed"},
        {"theta-seg", "minimum in-frustum fraction of a component"},
        {"phi-min", "smallest region-growing radius (m)"},
        {"phi-max", "largest region-growing radius (m)"},
        {"phi-step", "radius sweep step (m)"},
        {"fixed-phi", "use a single radius instead of the sweep"},
        {"angle-step", "rectangle orientation step (deg)"},
        {"theta-rect-frac", "key-edge band as a fraction of the shorter key edge"},
        {"vertex-eps", "key-vertex stability distance (m)"},
        {"size-filter", "l_min,l_max,w_min,w_max,h_min,h_max"},
        {"objective", "rectangle objective: key-edges | area"},
        {"denoise-stability", "key-vertex | all-corners"},
        {"denoise-return", "before | after (fit returned once stable)"},
        {"denoise-deletion", "edge-support | key-edge-band"},
        {"max-denoise-iters", "denoising round limit"},
        {"classes", "comma-separated classes to label"},
        {"min-frustum-points", "skip objects with fewer frustum points"},
    };
    for (const auto& [name, help] : valued) {
      const std::string key = name;
      app.add_option_function<std::string>(
          std::string("--") + name, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    }
    const std::pair<const char*, const char*> switches[] = {
        {"no-ground-removal", "segment without removing the ground"},
        {"no-denoise", "single rectangle fit, no key-vertex denoising"},
        {"no-intersection", "do not complete rectangles against the frustum"},
        {"no-context-removal", "do not remove segmented vehicles from later searches"},
    };
    for (const auto& [name, help] : switches) {
      const std::string key = name;
      app.add_flag_callback(std::string("--") + name, [this, key] { overrides.emplace_back(key, "true"); }, help);
    }
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (config_file) apply_config(cfg, parse_key_values(read_text_file(*config_file)));
    if (seed) cfg.ransac.seed = *seed;
    apply_config(cfg, overrides);
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D vehicle pseudo-labels from LiDAR scans and 2D boxes"};
  app.require_subcommand(1);
  int code = 0;

  // generate
  auto* gen = app.add_subcommand("generate", "generate pseudo-labels for a KITTI-layout dataset");
  GenerateOptions gen_opt;
  PipelineFlags gen_flags;
  std::string gen_frames;
  gen->add_option("--root", gen_opt.root, "dataset root (velodyne/ calib/ label_2/)")->required();
  gen->add_option("--out", gen_opt.out, "output directory")->required();
  gen->add_option("--frames", gen_frames, "frame list or range, e.g. 0-99,150");
  gen->add_option("--jobs", gen_opt.jobs, "worker threads (0: all cores)");
  gen_flags.add_to(*gen);
  gen->callback([&] {
    gen_opt.pipeline = gen_flags.build();
    gen_opt.frames = parse_frame_selection(gen_frames);
    code = cmd_generate(gen_opt, std::cerr);
  });

  // eval
  auto* ev = app.add_subcommand("eval", "score pseudo-labels against ground truth");
  EvalCommandOptions ev_opt;
  std::string ev_frames, thresholds = "0.3,0.5,0.7", report;
  ev->add_option("--pred", ev_opt.pred, "generate output directory")->required();
  ev->add_option("--gt", ev_opt.gt, "dataset root with label_2/")->required();
  ev->add_option("--thresholds", thresholds, "IoU thresholds")->capture_default_str();
  ev->add_option("--class", ev_opt.eval.cls, "evaluated class")->capture_default_str();
  ev->add_option("--frames", ev_frames, "frame list or range");
  ev->add_option("--report", report, "JSONL report path (default <pred>/eval.jsonl)");
  ev->callback([&] {
    ev_opt.eval.thresholds = parse_number_list(thresholds);
    ev_opt.frames = parse_frame_selection(ev_frames);
    if (!report.empty()) ev_opt.report = report;
    code = cmd_eval(ev_opt, std::cout, std::cerr);
  });

  // synth
  auto* sy = app.add_subcommand("synth", "write synthetic scenes in KITTI layout");
  SynthCommandOptions sy_opt;
  std::string spec_file;
  sy->add_option("--out", sy_opt.out, "output dataset root")->required();
  sy->add_option("--count", sy_opt.count, "number of random scenes")->capture_default_str();
  sy->add_option("--seed", sy_opt.seed, "scene seed")->capture_default_str();
  sy->add_option("--spec", spec_file, "write one scene from a spec file instead");
  sy->add_option("--min-vehicles", sy_opt.random.min_vehicles, "")->capture_default_str();
  sy->add_option("--max-vehicles", sy_opt.random.max_vehicles, "")->capture_default_str();
  sy->add_option("--max-occlusion", sy_opt.random.max_occlusion, "largest shadowed fraction per vehicle")->capture_default_str();
  sy->add_option("--outlier-probability", sy_opt.random.outlier_probability, "")->capture_default_str();
  sy->add_option("--spacing-spread", [&](const CLI::results_t& r) {
    sy_opt.random.spacing_spread_min = std::stod(r.at(0));
    sy_opt.random.spacing_spread_max = std::stod(r.at(1));
    return true;
  }, "per-vehicle spacing multiplier range")->expected(2);
  sy->add_option("--jobs", sy_opt.jobs, "worker threads (0: all cores)");
  sy->callback([&] {
    if (!spec_file.empty()) sy_opt.spec_file = spec_file;
    code = cmd_synth(sy_opt, std::cerr);
  });

  // render
  auto* rd = app.add_subcommand("render", "BEV SVG of one frame");
  RenderCommandOptions rd_opt;
  PipelineFlags rd_flags;
  std::string pred;
  rd->add_option("--root", rd_opt.root, "dataset root")->required();
  rd->add_option("--frame", rd_opt.frame, "frame id")->required();
  rd->add_option("--pred", pred, "generate output directory (otherwise the pipeline runs)");
  rd->add_option("--out", rd_opt.out, "SVG path")->required();
  rd->add_option("--x-range", [&](const CLI::results_t& r) {
    rd_opt.viewport.x_min = std::stod(r.at(0));
    rd_opt.viewport.x_max = std::stod(r.at(1));
    return true;
  }, "BEV x extent (m)")->expected(2);
  rd->add_option("--z-range", [&](const CLI::results_t& r) {
    rd_opt.viewport.z_min = std::stod(r.at(0));
    rd_opt.viewport.z_max = std::stod(r.at(1));
    return true;
  }, "BEV z extent (m)")->expected(2);
  rd->add_option("--scale", rd_opt.viewport.pixels_per_meter, "pixels per meter")->capture_default_str();
  rd_flags.add_to(*rd);
  rd->callback([&] {
    rd_opt.pipeline = rd_flags.build();
    if (!pred.empty()) rd_opt.pred = pred;
    code = cmd_render(rd_opt, std::cerr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return code;
}
