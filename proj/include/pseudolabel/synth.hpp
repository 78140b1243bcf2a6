#pragma once

// Synthetic LiDAR scenes with exact ground truth. Vehicle faces are sampled
// on regular grids, so point density is known exactly; optional occluder
// boxes (and other vehicles) remove points hidden behind them along camera
// rays.

#include "pseudolabel/core_types.hpp"
#include "pseudolabel/key_value.hpp"
#include "pseudolabel/kitti_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pseudolabel {

enum Face : unsigned {
  kFaceLeft = 1u << 0,   // +width side
  kFaceRight = 1u << 1,  // -width side
  kFaceFront = 1u << 2,  // +length end
  kFaceBack = 1u << 3,   // -length end
  kFaceTop = 1u << 4,
};

/// "left,front,top" <-> bitmask.
unsigned parse_faces(std::string_view text);
std::string format_faces(unsigned faces);

/// Side faces whose outward normal points towards `eye` in BEV.
unsigned faces_seen_from(const Box3D& box, const Point3& eye);

struct SynthVehicle {
  Box3D box;
  unsigned faces = kFaceLeft | kFaceFront;
  double point_spacing = 0.1;
  double noise_sigma = 0.0;
  int outlier_count = 0;
  double outlier_gap_min = 0.25;  // past the far end of a visible side face
  double outlier_gap_max = 0.6;
  // Allowed BEV distance from the corner nearest the camera.
  double outlier_corner_min = 2.0;
  double outlier_corner_max = 5.0;
};

struct SynthSpec {
  std::uint64_t seed = 0;
  std::vector<SynthVehicle> vehicles;
  std::vector<Box3D> occluders;  // cast shadows, emit no points
  bool vehicles_occlude = true;
  double ground_y = 1.65;  // camera height above a flat ground
  double ground_x_min = -25, ground_x_max = 25, ground_z_min = 3, ground_z_max = 45;
  double ground_spacing = 0.25;  // 0 disables ground
  double ground_noise = 0.02;
  Calibration calib = default_calibration();
  double image_width = 1242, image_height = 375;

  void validate() const;
  /// KITTI-like P2 and velodyne-to-camera axes, identity rectification.
  static Calibration default_calibration();
};

enum : int { kLabelGround = -1, kLabelOutlier = -2 };

struct SynthScene {
  SceneInput scene;
  std::vector<Box3D> gt;
  std::vector<int> point_labels;  // vehicle index, kLabelGround or kLabelOutlier
  std::vector<std::size_t> sampled_points;  // per vehicle, before shadowing
  std::vector<std::size_t> visible_points;  // per vehicle, after shadowing
  std::vector<double> occluded_fraction;

  bool clean(std::size_t vehicle, std::size_t min_points = 200) const {
    return occluded_fraction[vehicle] == 0.0 && visible_points[vehicle] >= min_points;
  }
};

/// Throws std::invalid_argument for specs that violate the invariants
/// (vehicle outside the image, non-positive spacing).
SynthScene generate(const SynthSpec& spec);

struct RandomSceneOptions {
  int min_vehicles = 1;
  int max_vehicles = 4;
  double max_occlusion = 0.5;
  double min_gap = 0.5;            // BEV clearance between vehicles
  double outlier_probability = 0.5;
  int max_outliers = 3;
  double top_probability = 0.5;
  double spacing_per_meter = 0.012;  // grid spacing grows with depth
  /// Per-vehicle multiplier on the spacing (dark paint returns fewer points).
  double spacing_spread_min = 0.6, spacing_spread_max = 2.2;
  double min_spacing = 0.08, max_spacing = 0.6;
  /// Each vehicle shows two side faces, each seen at least this far from
  /// grazing (deg).
  double min_view_angle_deg = 10.0;
};

/// Random 1-4 vehicle scene; resamples until every vehicle is at most
/// max_occlusion shadowed.
SynthSpec random_scene(std::uint64_t seed, const RandomSceneOptions& options = {});

/// Key/value schema (see README): seed, ground_y, ground_extent,
/// ground_spacing, ground_noise, vehicles_occlude, and repeated
/// `vehicle` / `occluder` lines.
SynthSpec parse_synth_spec(std::string_view text);
std::string format_synth_spec(const SynthSpec& spec);

/// GT labels (with projected 2D boxes) for a generated scene.
std::vector<LabelRecord> synth_labels(const SynthScene& scene);

/// Writes velodyne/, calib/, label_2/ and synth_meta/ entries for one frame.
void write_synth_frame(const std::filesystem::path& root, const std::string& frame_id, const SynthScene& scene);

}  // namespace pseudolabel
