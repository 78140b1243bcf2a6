#include "pseudolabel/pipeline.hpp"

#include "pseudolabel/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace pseudolabel {

void PipelineConfig::validate() const {
  ransac.validate();
  rect.validate();
  segmentation().validate();
  if (classes.empty()) throw std::invalid_argument("at least one class is required");
}

SegmentationConfig PipelineConfig::segmentation() const {
  SegmentationConfig s;
  s.theta_seg = theta_seg;
  s.phis = fixed_phi ? std::vector<double>{*fixed_phi} : SegmentationConfig::sweep(phi_min, phi_max, phi_step);
  return s;
}

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value + ",") {
    if (c == ',' || c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

std::string num(double v) { return format_number(v); }

}  // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  auto& sf = cfg.rect.size_filter;
  if (key == "ransac-iters") {
    cfg.ransac.iterations = static_cast<int>(parse_uint(value));
  } else if (key == "ransac-thresh") {
    cfg.ransac.inlier_threshold = parse_number(value);
  } else if (key == "ransac-seed" || key == "seed") {
    cfg.ransac.seed = parse_uint(value);
  } else if (key == "ransac-min-inliers") {
    cfg.ransac.min_inliers = parse_number(value);
  } else if (key == "theta-seg") {
    cfg.theta_seg = parse_number(value);
  } else if (key == "phi-min") {
    cfg.phi_min = parse_number(value);
  } else if (key == "phi-max") {
    cfg.phi_max = parse_number(value);
  } else if (key == "phi-step") {
    cfg.phi_step = parse_number(value);
  } else if (key == "fixed-phi") {
    if (value == "none" || value.empty()) {
      cfg.fixed_phi.reset();
    } else {
      cfg.fixed_phi = parse_number(value);
    }
  } else if (key == "angle-step") {
    cfg.rect.angle_step_deg = parse_number(value);
  } else if (key == "theta-rect-frac") {
    cfg.rect.theta_rect_fraction = parse_number(value);
  } else if (key == "vertex-eps") {
    cfg.rect.vertex_stability_eps = parse_number(value);
  } else if (key == "max-denoise-iters") {
    cfg.rect.max_denoise_iters = static_cast<int>(parse_uint(value));
  } else if (key == "size-filter") {
    const auto v = parse_number_list(value);
    if (v.size() != 6) throw std::invalid_argument("size-filter expects l_min,l_max,w_min,w_max,h_min,h_max");
    sf = {v[0], v[1], v[2], v[3], v[4], v[5]};
  } else if (key == "objective") {
    if (value == "key-edges") {
      cfg.rect.objective = RectObjective::KeyEdges;
    } else if (value == "area") {
      cfg.rect.objective = RectObjective::Area;
    } else {
      throw std::invalid_argument("objective must be key-edges or area");
    }
  } else if (key == "denoise-stability") {
    if (value == "key-vertex") {
      cfg.rect.stability = DenoiseStability::KeyVertex;
    } else if (value == "all-corners") {
      cfg.rect.stability = DenoiseStability::AllCorners;
    } else {
      throw std::invalid_argument("denoise-stability must be key-vertex or all-corners");
    }
  } else if (key == "denoise-return") {
    if (value == "before") {
      cfg.rect.denoise_return = DenoiseReturn::BeforeDeletion;
    } else if (value == "after") {
      cfg.rect.denoise_return = DenoiseReturn::AfterDeletion;
    } else {
      throw std::invalid_argument("denoise-return must be before or after");
    }
  } else if (key == "denoise-deletion") {
    if (value == "edge-support") {
      cfg.rect.deletion = DeletionRule::EdgeSupport;
    } else if (value == "key-edge-band") {
      cfg.rect.deletion = DeletionRule::KeyEdgeBand;
    } else {
      throw std::invalid_argument("denoise-deletion must be edge-support or key-edge-band");
    }
  } else if (key == "no-ground-removal") {
    cfg.ground_removal = !parse_bool(value);
  } else if (key == "no-denoise") {
    cfg.denoise = !parse_bool(value);
  } else if (key == "no-intersection") {
    cfg.frustum_intersection = !parse_bool(value);
  } else if (key == "no-context-removal") {
    cfg.context_removal = !parse_bool(value);
  } else if (key == "classes") {
    cfg.classes = split_list(value);
  } else if (key == "min-frustum-points") {
    cfg.min_frustum_points = parse_uint(value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void apply_config(PipelineConfig& cfg, const KeyValueList& entries) {
  for (const auto& [k, v] : entries) apply_config_entry(cfg, k, v);
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  const auto& sf = cfg.rect.size_filter;
  out << "ransac-iters = " << cfg.ransac.iterations << "\n";
  out << "ransac-thresh = " << num(cfg.ransac.inlier_threshold) << "\n";
  out << "ransac-seed = " << cfg.ransac.seed << "\n";
  out << "ransac-min-inliers = " << num(cfg.ransac.min_inliers) << "\n";
  out << "theta-seg = " << num(cfg.theta_seg) << "\n";
  out << "phi-min = " << num(cfg.phi_min) << "\n";
  out << "phi-max = " << num(cfg.phi_max) << "\n";
  out << "phi-step = " << num(cfg.phi_step) << "\n";
  out << "fixed-phi = " << (cfg.fixed_phi ? num(*cfg.fixed_phi) : std::string("none")) << "\n";
  out << "angle-step = " << num(cfg.rect.angle_step_deg) << "\n";
  out << "theta-rect-frac = " << num(cfg.rect.theta_rect_fraction) << "\n";
  out << "vertex-eps = " << num(cfg.rect.vertex_stability_eps) << "\n";
  out << "max-denoise-iters = " << cfg.rect.max_denoise_iters << "\n";
  out << "size-filter = " << num(sf.min_l) << ',' << num(sf.max_l) << ',' << num(sf.min_w) << ',' << num(sf.max_w)
      << ',' << num(sf.min_h) << ',' << num(sf.max_h) << "\n";
  out << "objective = " << (cfg.rect.objective == RectObjective::Area ? "area" : "key-edges") << "\n";
  out << "denoise-stability = " << (cfg.rect.stability == DenoiseStability::KeyVertex ? "key-vertex" : "all-corners")
      << "\n";
  out << "denoise-return = " << (cfg.rect.denoise_return == DenoiseReturn::AfterDeletion ? "after" : "before") << "\n";
  out << "denoise-deletion = " << (cfg.rect.deletion == DeletionRule::KeyEdgeBand ? "key-edge-band" : "edge-support")
      << "\n";
  out << "no-ground-removal = " << (cfg.ground_removal ? "false" : "true") << "\n";
  out << "no-denoise = " << (cfg.denoise ? "false" : "true") << "\n";
  out << "no-intersection = " << (cfg.frustum_intersection ? "false" : "true") << "\n";
  out << "no-context-removal = " << (cfg.context_removal ? "false" : "true") << "\n";
  out << "classes = ";
  for (std::size_t i = 0; i < cfg.classes.size(); ++i) out << (i ? "," : "") << cfg.classes[i];
  out << "\n";
  out << "min-frustum-points = " << cfg.min_frustum_points << "\n";
  return out.str();
}

const char* to_string(ObjectStatus s) {
  switch (s) {
    case ObjectStatus::Generated: return "generated";
    case ObjectStatus::Skipped: return "skipped";
    case ObjectStatus::Filtered: return "filtered";
  }
  return "?";
}

FrameCounts& FrameCounts::operator+=(const FrameCounts& o) {
  objects += o.objects;
  generated += o.generated;
  skipped += o.skipped;
  filtered += o.filtered;
  unstable += o.unstable;
  return *this;
}

std::vector<LabelRecord> FrameResult::labels() const {
  std::vector<LabelRecord> out;
  for (const auto& o : objects) {
    if (o.label) out.push_back(*o.label);
  }
  return out;
}

std::vector<std::vector<std::string>> FrameResult::label_flags() const {
  std::vector<std::vector<std::string>> out;
  for (const auto& o : objects) {
    if (o.label) out.push_back(o.flags);
  }
  return out;
}

FrameResult label_frame(const SceneInput& scene, const PipelineConfig& cfg) {
  cfg.validate();
  const PointCloud& cloud = scene.cloud;
  FrameResult result;
  result.frame_id = scene.frame_id;

  PointSet nonground = PointSet::all(cloud.size());
  if (cfg.ground_removal && !cloud.empty()) {
    try {
      const GroundEstimate g = estimate_ground(cloud, cfg.ransac);
      result.ground = g.plane;
      nonground = remove_ground(cloud, g.ground);
    } catch (const LowConfidenceError& e) {
      // Keep going with the best plane; the labels carry a frame flag.
      result.ground = e.best_plane();
      result.frame_flags.push_back("low_confidence_ground");
      std::vector<PointId> ground;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (e.best_plane().distance(cloud.points[i]) <= cfg.ransac.inlier_threshold) {
          ground.push_back(static_cast<PointId>(i));
        }
      }
      nonground = remove_ground(cloud, PointSet::from_sorted(std::move(ground)));
    } catch (const EstimationError&) {
      result.frame_flags.push_back("ground_failed");
    }
  }

  std::vector<std::size_t> eligible;  // indices into result.objects
  std::vector<FrustumRegion> eligible_frustums;
  for (std::size_t b = 0; b < scene.boxes2d.size(); ++b) {
    const auto& tb = scene.boxes2d[b];
    if (std::find(cfg.classes.begin(), cfg.classes.end(), tb.type) == cfg.classes.end()) continue;
    ObjectOutcome obj;
    obj.box_index = b;
    FrustumRegion fr = extract_frustum(cloud, nonground, tb.box, scene.calib);
    obj.frustum_points = fr.points.size();
    if (fr.points.size() < cfg.min_frustum_points) {
      obj.reason = fr.empty() ? "empty frustum" : "too few frustum points";
    } else {
      eligible.push_back(result.objects.size());
      eligible_frustums.push_back(fr);
    }
    result.frustums.push_back(std::move(fr));
    result.objects.push_back(std::move(obj));
  }

  const auto segs = process_scene(cloud, nonground, eligible_frustums, cfg.segmentation(), cfg.context_removal);
  std::optional<Plane> plane = cfg.ground_removal ? result.ground : std::nullopt;

  for (std::size_t e = 0; e < eligible.size(); ++e) {
    ObjectOutcome& obj = result.objects[eligible[e]];
    const auto& seg = segs[e];
    if (!seg.result) {
      obj.reason = "segmentation failed: " + seg.failure;
      continue;
    }
    obj.mask_points = seg.result->mask.size();
    obj.chosen_phi = seg.result->chosen_phi;
    obj.per_phi_sizes = seg.result->per_phi_sizes;
    const auto q = bev_points(cloud, seg.result->mask);
    BevRectangle rect;
    try {
      if (cfg.denoise) {
        const DenoiseResult d = denoise_key_vertex(q, cfg.rect);
        rect = d.rect;
        if (d.stop == DenoiseStop::Exhausted) obj.flags.push_back("unstable");
      } else {
        rect = fit_rectangle(q, cfg.rect);
      }
    } catch (const FitError& err) {
      obj.reason = std::string("fit failed: ") + err.what();
      continue;
    }
    if (cfg.frustum_intersection) {
      const IntersectResult ir = intersect_frustum(rect, eligible_frustums[e]);
      if (ir.degenerate) obj.flags.push_back("intersect_degenerate");
      rect = ir.rect;
    }
    obj.rect = rect;
    const Box3D box = lift_to_3d(rect, seg.result->mask, cloud, plane);
    obj.box = box;
    if (!passes_size_filter(box, cfg.rect.size_filter)) {
      obj.status = ObjectStatus::Filtered;
      obj.reason = "size filter";
      continue;
    }
    for (const auto& f : result.frame_flags) obj.flags.push_back(f);
    const auto& tb = scene.boxes2d[obj.box_index];
    LabelRecord label = box3d_to_label(box, tb.box, tb.type);
    label.truncation = tb.truncation;
    label.occlusion = tb.occlusion;
    obj.label = label;
    obj.status = ObjectStatus::Generated;
  }

  for (const auto& o : result.objects) {
    ++result.counts.objects;
    switch (o.status) {
      case ObjectStatus::Generated: ++result.counts.generated; break;
      case ObjectStatus::Skipped: ++result.counts.skipped; break;
      case ObjectStatus::Filtered: ++result.counts.filtered; break;
    }
    if (std::find(o.flags.begin(), o.flags.end(), "unstable") != o.flags.end()) ++result.counts.unstable;
  }
  return result;
}

}  // namespace pseudolabel
