#include "pseudolabel/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pseudolabel {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

double polygon_area(std::span<const Vec2> poly) {
  double twice = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  return twice / 2;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2 a = clip[e];
    const Vec2 b = clip[(e + 1) % clip.size()];
    const Vec2 dir = b - a;
    in.swap(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2& p = in[i];
      const Vec2& q = in[(i + 1) % in.size()];
      const double sp = cross(dir, p - a);
      const double sq = cross(dir, q - a);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) out.push_back(p + (q - p) * (sp / (sp - sq)));
    }
  }
  return out;
}

double convex_polygon_intersection_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  const auto poly = clip_convex(a, b);
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, polygon_area(poly));
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const auto ca = a.bev_corners();
  const auto cb = b.bev_corners();
  const double inter = convex_polygon_intersection_area(ca, cb);
  const double uni = a.length * a.width + b.length * b.width - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const auto ca = a.bev_corners();
  const auto cb = b.bev_corners();
  const double overlap_y = std::min(a.y_bottom(), b.y_bottom()) - std::max(a.y_top(), b.y_top());
  if (overlap_y <= 0) return 0.0;
  const double inter = convex_polygon_intersection_area(ca, cb) * overlap_y;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

namespace {

bool same_box(const Box2D& a, const Box2D& b) {
  constexpr double tol = 1e-2 + 1e-9;
  return std::abs(a.u_min - b.u_min) <= tol && std::abs(a.v_min - b.v_min) <= tol &&
         std::abs(a.u_max - b.u_max) <= tol && std::abs(a.v_max - b.v_max) <= tol;
}

bool has_flag(const std::vector<std::string>& flags, const char* f) {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

}  // namespace

EvalReport match_and_score(std::span<const FrameLabels> pred, std::span<const FrameLabels> gt,
                           const EvalOptions& options) {
  EvalReport report;
  std::map<std::string, const FrameLabels*> gt_by_frame;
  for (const auto& g : gt) gt_by_frame[g.frame_id] = &g;

  double iou_sum = 0;
  for (const auto& frame : pred) {
    auto it = gt_by_frame.find(frame.frame_id);
    if (it == gt_by_frame.end()) {
      report.skipped_frames.push_back(frame.frame_id);
      continue;
    }
    const auto& gt_labels = it->second->labels;
    std::vector<bool> used(gt_labels.size(), false);
    std::size_t gt_in_class = 0;
    for (const auto& g : gt_labels) gt_in_class += g.type == options.cls ? 1 : 0;
    report.counts.gt_total += gt_in_class;

    std::size_t matched = 0;
    for (std::size_t i = 0; i < frame.labels.size(); ++i) {
      const auto& p = frame.labels[i];
      if (p.type != options.cls) continue;
      EvalObject obj;
      obj.frame_id = frame.frame_id;
      obj.object_index = i;
      if (i < frame.flags.size()) obj.flags = frame.flags[i];
      for (std::size_t j = 0; j < gt_labels.size(); ++j) {
        if (used[j] || gt_labels[j].type != options.cls || !same_box(gt_labels[j].box2d, p.box2d)) continue;
        used[j] = true;
        obj.matched_gt = static_cast<long>(j);
        const Box3D pb = label_to_box3d(p);
        const Box3D gb = label_to_box3d(gt_labels[j]);
        obj.iou_bev = iou_bev(pb, gb);
        obj.iou_3d = iou_3d(pb, gb);
        ++matched;
        break;
      }
      iou_sum += obj.iou_3d;
      ++report.counts.generated;
      if (has_flag(obj.flags, "unstable")) ++report.counts.unstable;
      report.per_object.push_back(std::move(obj));
    }
    report.counts.skipped += gt_in_class - matched;
  }
  for (const auto& g : gt) {
    const bool scored = std::any_of(pred.begin(), pred.end(), [&](const FrameLabels& p) { return p.frame_id == g.frame_id; });
    if (!scored) report.skipped_frames.push_back(g.frame_id);
  }

  const auto gen = static_cast<double>(report.counts.generated);
  report.mean_iou = gen > 0 ? iou_sum / gen : 0.0;
  report.mean_iou_over_gt = report.counts.gt_total > 0 ? iou_sum / static_cast<double>(report.counts.gt_total) : 0.0;
  report.coverage = report.counts.gt_total > 0 ? gen / static_cast<double>(report.counts.gt_total) : 0.0;
  for (double t : options.thresholds) {
    std::size_t hits = 0;
    for (const auto& o : report.per_object) hits += o.iou_3d >= t ? 1 : 0;
    report.precision[t] = gen > 0 ? static_cast<double>(hits) / gen : 0.0;
  }
  return report;
}

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  char buf[128];
  out << "Mean IoU   ";
  for (const auto& [t, _] : r.precision) {
    std::snprintf(buf, sizeof buf, "  P@%.2f", t);
    out << buf;
  }
  out << "\n";
  std::snprintf(buf, sizeof buf, "%-10.4f ", r.mean_iou);
  out << buf;
  for (const auto& [_, p] : r.precision) {
    std::snprintf(buf, sizeof buf, "  %6.2f", 100.0 * p);
    out << buf;
  }
  out << "\n";
  std::snprintf(buf, sizeof buf,
                "generated %zu / gt %zu (coverage %.2f%%), skipped %zu, filtered %zu, unstable %zu\n",
                r.counts.generated, r.counts.gt_total, 100.0 * r.coverage, r.counts.skipped, r.counts.filtered,
                r.counts.unstable);
  out << buf;
  std::snprintf(buf, sizeof buf, "mean IoU over all GT: %.4f\n", r.mean_iou_over_gt);
  out << buf;
  if (!r.skipped_frames.empty()) {
    out << "frames without ground truth (skipped):";
    for (const auto& f : r.skipped_frames) out << ' ' << f;
    out << "\n";
  }
  return out.str();
}

std::string format_report_jsonl(const EvalReport& r) {
  std::string out;
  for (const auto& o : r.per_object) {
    nlohmann::ordered_json j;
    j["frame"] = o.frame_id;
    j["index"] = o.object_index;
    j["iou_bev"] = o.iou_bev;
    j["iou_3d"] = o.iou_3d;
    j["matched_gt"] = o.matched_gt;
    j["flags"] = o.flags;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json s;
  s["summary"] = true;
  s["mean_iou"] = r.mean_iou;
  s["mean_iou_over_gt"] = r.mean_iou_over_gt;
  s["coverage"] = r.coverage;
  nlohmann::ordered_json prec = nlohmann::ordered_json::object();
  for (const auto& [t, p] : r.precision) {
    char key[32];
    std::snprintf(key, sizeof key, "%.2f", t);
    prec[key] = p;
  }
  s["precision"] = prec;
  s["generated"] = r.counts.generated;
  s["gt_total"] = r.counts.gt_total;
  s["skipped"] = r.counts.skipped;
  s["filtered"] = r.counts.filtered;
  s["unstable"] = r.counts.unstable;
  s["skipped_frames"] = r.skipped_frames;
  out += s.dump() + "\n";
  return out;
}

}  // namespace pseudolabel
