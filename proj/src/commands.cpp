#include "pseudolabel/commands.hpp"

#include "pseudolabel/errors.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace pseudolabel {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

json counts_json(const FrameCounts& c) {
  json j;
  j["objects"] = c.objects;
  j["generated"] = c.generated;
  j["skipped"] = c.skipped;
  j["filtered"] = c.filtered;
  j["unstable"] = c.unstable;
  return j;
}

void set_threads(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

std::vector<std::string> label_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) return ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") ids.push_back(e.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::vector<std::string> parse_frame_selection(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto dash = token.find('-');
    if (dash != std::string::npos && dash > 0 && all_digits(token.substr(0, dash)) &&
        all_digits(token.substr(dash + 1))) {
      const std::size_t a = std::stoul(token.substr(0, dash));
      const std::size_t b = std::stoul(token.substr(dash + 1));
      if (b < a) throw std::invalid_argument("descending frame range '" + token + "'");
      for (std::size_t i = a; i <= b; ++i) out.push_back(frame_name(i));
    } else if (all_digits(token)) {
      out.push_back(frame_name(std::stoul(token)));
    } else {
      out.push_back(token);
    }
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return out;
}

std::string frame_meta_json(const FrameResult& r, const SceneInput& scene) {
  json j;
  j["frame"] = r.frame_id;
  j["points"] = scene.cloud.size();
  j["frame_flags"] = r.frame_flags;
  if (r.ground) {
    j["ground"] = {{"normal", {r.ground->normal.x(), r.ground->normal.y(), r.ground->normal.z()}},
                   {"offset", r.ground->offset}};
  } else {
    j["ground"] = nullptr;
  }
  j["objects"] = json::array();
  for (std::size_t i = 0; i < r.objects.size(); ++i) {
    const auto& o = r.objects[i];
    const auto& tb = scene.boxes2d[o.box_index];
    json oj;
    oj["source_index"] = tb.source_index;
    oj["type"] = tb.type;
    oj["status"] = to_string(o.status);
    if (!o.reason.empty()) oj["reason"] = o.reason;
    oj["flags"] = o.flags;
    oj["frustum_points"] = o.frustum_points;
    oj["mask_points"] = o.mask_points;
    oj["chosen_phi"] = o.chosen_phi;
    json sizes = json::array();
    for (const auto& [phi, n] : o.per_phi_sizes) sizes.push_back(json::array({phi, n}));
    oj["mask_size_per_phi"] = sizes;
    if (o.rect) {
      oj["key_vertex"] = vec2_json(o.rect->key());
      json corners = json::array();
      for (const auto& c : o.rect->corners) corners.push_back(vec2_json(c));
      oj["bev_corners"] = corners;
    }
    j["objects"].push_back(oj);
  }
  j["counts"] = counts_json(r.counts);
  return j.dump(2) + "\n";
}

int cmd_generate(const GenerateOptions& opt, std::ostream& log) {
  opt.pipeline.validate();
  const std::vector<std::string> frames = opt.frames.empty() ? list_frames(opt.root) : opt.frames;
  if (frames.empty()) {
    log << "warning: no frames to process\n";
    return 0;
  }
  fs::create_directories(opt.out / "label_2");
  fs::create_directories(opt.out / "meta");
  write_text_file(opt.out / "config.txt", format_config(opt.pipeline));

  std::vector<FrameCounts> counts(frames.size());
  std::vector<std::string> errors(frames.size());
  set_threads(opt.jobs);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      const LoadedFrame frame = load_frame(opt.root, frames[i]);
      const FrameResult result = label_frame(frame.scene, opt.pipeline);
      write_text_file(opt.out / "label_2" / (frames[i] + ".txt"), write_labels(result.labels()));
      write_text_file(opt.out / "meta" / (frames[i] + ".json"), frame_meta_json(result, frame.scene));
      counts[i] = result.counts;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  FrameCounts total;
  json failed = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!errors[i].empty()) {
      log << "error: frame " << frames[i] << ": " << errors[i] << "\n";
      failed.push_back({{"frame", frames[i]}, {"error", errors[i]}});
    } else {
      total += counts[i];
    }
  }
  json summary;
  summary["frames"] = frames.size();
  summary["frames_failed"] = failed.size();
  summary["counts"] = counts_json(total);
  summary["failed"] = failed;
  write_text_file(opt.out / "summary.json", summary.dump(2) + "\n");
  log << "frames " << frames.size() - failed.size() << "/" << frames.size() << ", objects " << total.objects
      << ": generated " << total.generated << ", skipped " << total.skipped << ", filtered " << total.filtered
      << ", unstable " << total.unstable << "\n";
  return failed.size() == frames.size() ? 1 : 0;
}

int cmd_eval(const EvalCommandOptions& opt, std::ostream& out, std::ostream& log) {
  const fs::path pred_labels = fs::is_directory(opt.pred / "label_2") ? opt.pred / "label_2" : opt.pred;
  const fs::path gt_labels = opt.gt / "label_2";
  if (!fs::is_directory(pred_labels) || !fs::is_directory(gt_labels)) {
    log << "error: missing label directory (" << pred_labels.string() << " or " << gt_labels.string() << ")\n";
    return 1;
  }
  std::vector<std::string> pred_ids = label_ids(pred_labels);
  std::vector<std::string> gt_ids = opt.frames.empty() ? pred_ids : opt.frames;
  if (!opt.frames.empty()) {
    std::erase_if(pred_ids, [&](const std::string& id) {
      return std::find(opt.frames.begin(), opt.frames.end(), id) == opt.frames.end();
    });
  }

  std::vector<FrameLabels> pred, gt;
  std::size_t filtered = 0;
  try {
    for (const auto& id : pred_ids) {
      FrameLabels f;
      f.frame_id = id;
      f.labels = read_labels(read_text_file(pred_labels / (id + ".txt")));
      const fs::path meta = opt.pred / "meta" / (id + ".json");
      if (fs::exists(meta)) {
        const json m = json::parse(read_text_file(meta));
        for (const auto& o : m.at("objects")) {
          const std::string status = o.at("status");
          if (status == "generated") f.flags.push_back(o.at("flags").get<std::vector<std::string>>());
          if (status == "filtered" && o.at("type") == opt.eval.cls) ++filtered;
        }
      }
      if (f.flags.size() != f.labels.size()) f.flags.clear();
      pred.push_back(std::move(f));
    }
    for (const auto& id : gt_ids) {
      const fs::path p = gt_labels / (id + ".txt");
      if (!fs::exists(p)) continue;
      gt.push_back({id, read_labels(read_text_file(p)), {}});
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }

  EvalReport report = match_and_score(pred, gt, opt.eval);
  report.counts.filtered = filtered;
  out << format_report_table(report);
  const fs::path report_path = opt.report.value_or(opt.pred / "eval.jsonl");
  try {
    write_text_file(report_path, format_report_jsonl(report));
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_synth(const SynthCommandOptions& opt, std::ostream& log) {
  std::vector<SynthSpec> specs;
  if (opt.spec_file) {
    specs.push_back(parse_synth_spec(read_text_file(*opt.spec_file)));
  } else {
    specs.resize(opt.count);
    std::vector<std::string> errors(opt.count);
    set_threads(opt.jobs);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < opt.count; ++i) {
      try {
        specs[i] = random_scene(opt.seed * 0x9E3779B97F4A7C15ull + i, opt.random);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw std::runtime_error(e);
    }
  }
  for (const char* d : {"velodyne", "calib", "label_2", "synth_meta", "synth_spec"}) fs::create_directories(opt.out / d);
  std::vector<std::string> errors(specs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      const std::string id = frame_name(i);
      SynthScene scene = generate(specs[i]);
      scene.scene.frame_id = id;
      write_synth_frame(opt.out, id, scene);
      write_text_file(opt.out / "synth_spec" / (id + ".txt"), format_synth_spec(specs[i]));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      log << "error: scene " << i << ": " << errors[i] << "\n";
      return 1;
    }
  }
  log << "wrote " << specs.size() << " synthetic frame(s) to " << opt.out.string() << "\n";
  return 0;
}

int cmd_render(const RenderCommandOptions& opt, std::ostream& log) {
  const LoadedFrame frame = load_frame(opt.root, opt.frame);
  BevFigure fig;
  fig.cloud = frame.scene.cloud;
  for (const auto& l : frame.labels) {
    if (l.type != "DontCare" && l.h > 0 && l.w > 0 && l.l > 0) fig.gt.push_back(label_to_box3d(l));
  }
  for (const auto& tb : frame.scene.boxes2d) {
    if (std::find(opt.pipeline.classes.begin(), opt.pipeline.classes.end(), tb.type) == opt.pipeline.classes.end()) {
      continue;
    }
    fig.frustum_lines.push_back(boundary_ray(tb.box.u_min, frame.scene.calib));
    fig.frustum_lines.push_back(boundary_ray(tb.box.u_max, frame.scene.calib));
  }
  if (opt.pred) {
    const fs::path labels = *opt.pred / "label_2" / (opt.frame + ".txt");
    if (fs::exists(labels)) {
      for (const auto& l : read_labels(read_text_file(labels))) fig.pred.push_back(label_to_box3d(l));
    } else {
      log << "warning: no predictions for frame " << opt.frame << "\n";
    }
    const fs::path meta = *opt.pred / "meta" / (opt.frame + ".json");
    if (fs::exists(meta)) {
      const json m = json::parse(read_text_file(meta));
      for (const auto& o : m.at("objects")) {
        if (o.contains("key_vertex")) fig.key_vertices.emplace_back(o["key_vertex"][0], o["key_vertex"][1]);
      }
    }
  } else {
    const FrameResult r = label_frame(frame.scene, opt.pipeline);
    for (const auto& o : r.objects) {
      if (o.status == ObjectStatus::Generated) fig.pred.push_back(*o.box);
      if (o.rect) fig.key_vertices.push_back(o.rect->key());
    }
  }
  write_text_file(opt.out, render_bev_svg(fig, opt.viewport));
  log << "wrote " << opt.out.string() << "\n";
  return 0;
}

}  // namespace pseudolabel
