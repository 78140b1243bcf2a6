#pragma once

// Per-frame pseudo-label generation: ground removal, frustum extraction,
// nearest-first segmentation, rectangle fit, denoise, frustum completion,
// lift to 3D and size filtering.

#include "pseudolabel/box_fit.hpp"
#include "pseudolabel/frustum.hpp"
#include "pseudolabel/ground_plane.hpp"
#include "pseudolabel/key_value.hpp"
#include "pseudolabel/kitti_io.hpp"
#include "pseudolabel/segmentation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pseudolabel {

struct PipelineConfig {
  RansacConfig ransac;
  double theta_seg = 0.8;
  double phi_min = 0.1, phi_max = 0.7, phi_step = 0.1;
  std::optional<double> fixed_phi;
  RectFitConfig rect;
  bool ground_removal = true;
  bool denoise = true;
  bool frustum_intersection = true;
  bool context_removal = true;
  std::vector<std::string> classes{"Car"};
  std::size_t min_frustum_points = 10;

  void validate() const;
  SegmentationConfig segmentation() const;
};

/// Applies `key = value` entries named like the CLI flags (without dashes),
/// e.g. `ransac-iters = 300`, `no-denoise = true`. Unknown keys throw.
void apply_config(PipelineConfig& cfg, const KeyValueList& entries);
void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value);
/// Every field, in a form apply_config reads back.
std::string format_config(const PipelineConfig& cfg);

enum class ObjectStatus { Generated, Skipped, Filtered };
const char* to_string(ObjectStatus s);

struct ObjectOutcome {
  std::size_t box_index = 0;  // into SceneInput::boxes2d
  ObjectStatus status = ObjectStatus::Skipped;
  std::string reason;
  std::vector<std::string> flags;
  std::size_t frustum_points = 0;
  std::size_t mask_points = 0;
  double chosen_phi = 0;
  std::vector<std::pair<double, std::size_t>> per_phi_sizes;
  std::optional<BevRectangle> rect;  // final BEV rectangle
  std::optional<Box3D> box;
  std::optional<LabelRecord> label;  // set for Generated
};

struct FrameCounts {
  std::size_t objects = 0, generated = 0, skipped = 0, filtered = 0, unstable = 0;
  FrameCounts& operator+=(const FrameCounts& o);
};

struct FrameResult {
  std::string frame_id;
  std::optional<Plane> ground;
  std::vector<std::string> frame_flags;
  std::vector<FrustumRegion> frustums;  // parallel to objects
  std::vector<ObjectOutcome> objects;   // one per 2D box of a configured class
  FrameCounts counts;

  std::vector<LabelRecord> labels() const;
  std::vector<std::vector<std::string>> label_flags() const;
};

FrameResult label_frame(const SceneInput& scene, const PipelineConfig& cfg);

}  // namespace pseudolabel
