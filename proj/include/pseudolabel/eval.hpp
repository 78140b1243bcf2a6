#pragma once

#include "pseudolabel/core_types.hpp"
#include "pseudolabel/kitti_io.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace pseudolabel {

/// Signed shoelace area (positive for counterclockwise).
double polygon_area(std::span<const Vec2> poly);

/// Clips `subject` by every edge of the convex counterclockwise `clip`.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

double convex_polygon_intersection_area(std::span<const Vec2> a, std::span<const Vec2> b);

double iou_bev(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

/// Labels of one frame plus per-label flags (parallel to `labels`, may be empty).
struct FrameLabels {
  std::string frame_id;
  std::vector<LabelRecord> labels;
  std::vector<std::vector<std::string>> flags;
};

struct EvalObject {
  std::string frame_id;
  std::size_t object_index = 0;  // prediction line
  double iou_bev = 0;
  double iou_3d = 0;
  long matched_gt = -1;          // label_2 line, -1 when unmatched
  std::vector<std::string> flags;
};

struct EvalCounts {
  std::size_t gt_total = 0;  // evaluated-class GT objects in scored frames
  std::size_t generated = 0;
  std::size_t skipped = 0;   // GT objects with no prediction
  std::size_t filtered = 0;
  std::size_t unstable = 0;
};

struct EvalReport {
  double mean_iou = 0;          // over generated labels
  double mean_iou_over_gt = 0;  // missing predictions count as 0
  double coverage = 0;          // generated / gt_total
  std::map<double, double> precision;
  std::vector<EvalObject> per_object;
  EvalCounts counts;
  std::vector<std::string> skipped_frames;
};

struct EvalOptions {
  std::vector<double> thresholds{0.3, 0.5, 0.7};
  std::string cls = "Car";
};

/// Predictions are matched to the GT object with the same class and 2D box
/// (to 0.01 px), each GT used once.
EvalReport match_and_score(std::span<const FrameLabels> pred, std::span<const FrameLabels> gt,
                           const EvalOptions& options = {});

std::string format_report_table(const EvalReport& report);
/// One JSON object per line: per-object records, then a summary record.
std::string format_report_jsonl(const EvalReport& report);

}  // namespace pseudolabel
