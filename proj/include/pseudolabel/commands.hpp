#pragma once

#include "pseudolabel/eval.hpp"
#include "pseudolabel/pipeline.hpp"
#include "pseudolabel/render.hpp"
#include "pseudolabel/synth.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pseudolabel {

/// "3,5-7,000010" -> {"000003", "000005", "000006", "000007", "000010"}.
/// Non-numeric entries are taken verbatim as frame ids.
std::vector<std::string> parse_frame_selection(const std::string& text);

struct GenerateOptions {
  std::filesystem::path root;
  std::filesystem::path out;
  std::vector<std::string> frames;  // empty: every frame under root/velodyne
  PipelineConfig pipeline;
  int jobs = 0;  // 0: OpenMP default
};

/// Writes out/label_2/<id>.txt, out/meta/<id>.json, out/config.txt and
/// out/summary.json. Returns the process exit code.
int cmd_generate(const GenerateOptions& options, std::ostream& log);

struct EvalCommandOptions {
  std::filesystem::path pred;  // a generate output dir (or a dir of label files)
  std::filesystem::path gt;    // dataset root with label_2/
  std::vector<std::string> frames;
  EvalOptions eval;
  std::optional<std::filesystem::path> report;  // default pred/eval.jsonl
};

int cmd_eval(const EvalCommandOptions& options, std::ostream& out, std::ostream& log);

struct SynthCommandOptions {
  std::filesystem::path out;
  std::size_t count = 10;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> spec_file;  // one frame from a spec file
  RandomSceneOptions random;
  int jobs = 0;
};

int cmd_synth(const SynthCommandOptions& options, std::ostream& log);

struct RenderCommandOptions {
  std::filesystem::path root;
  std::string frame;
  std::optional<std::filesystem::path> pred;  // generate output; otherwise the pipeline runs
  std::filesystem::path out;
  PipelineConfig pipeline;
  Viewport viewport;
};

int cmd_render(const RenderCommandOptions& options, std::ostream& log);

/// Per-frame metadata written next to the labels.
std::string frame_meta_json(const FrameResult& result, const SceneInput& scene);

}  // namespace pseudolabel
