#pragma once

// KITTI object-detection layout: velodyne/<id>.bin, calib/<id>.txt,
// label_2/<id>.txt (image_2/ is never read).

#include "pseudolabel/core_types.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pseudolabel {

struct TaggedBox2D {
  Box2D box;
  std::string type;
  /// Line index of the source record in label_2; identifies the object.
  std::size_t source_index = 0;
  double truncation = 0;  // passed through to the generated label
  int occlusion = 0;
};

struct SceneInput {
  std::string frame_id;
  PointCloud cloud;  // camera-rectified frame
  Calibration calib;
  std::vector<TaggedBox2D> boxes2d;
};

struct LabelRecord {
  std::string type = "Car";
  double truncation = 0;
  int occlusion = 0;
  double alpha = 0;
  Box2D box2d;
  double h = 0, w = 0, l = 0;
  Point3 location = Point3::Zero();  // bottom-face center
  double rotation_y = 0;
  std::optional<double> score;
};

struct RectifiedCloud {
  PointCloud cloud;
  /// source_index[i] is the index in the raw scan of rectified point i.
  std::vector<std::size_t> source_index;
};

/// Little-endian float32 (x, y, z, reflectance) records; reflectance dropped.
PointCloud read_scan(std::span<const std::byte> bytes);
std::vector<std::byte> write_scan(const PointCloud& cloud);

Calibration read_calibration(std::string_view text);
std::string write_calibration(const Calibration& calib);

/// rectification * lidar_to_cam applied to every point, then z <= 0.1 m dropped.
RectifiedCloud lidar_to_rect(const PointCloud& cloud, const Calibration& calib);

std::string write_labels(std::span<const LabelRecord> records);
std::vector<LabelRecord> read_labels(std::string_view text);

LabelRecord box3d_to_label(const Box3D& box, const Box2D& box2d, std::string type = "Car");
Box3D label_to_box3d(const LabelRecord& record);

/// KITTI observation angle: rotation_y - atan2(x, z), wrapped to [-pi, pi).
double observation_angle(double rotation_y, const Point3& location);

std::string frame_name(std::size_t index);

struct FrameFiles {
  std::filesystem::path scan, calib, labels;
};
FrameFiles frame_files(const std::filesystem::path& root, std::string_view frame_id);

/// Frame ids found under root/velodyne, sorted.
std::vector<std::string> list_frames(const std::filesystem::path& root);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::byte> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

struct LoadedFrame {
  SceneInput scene;
  std::vector<LabelRecord> labels;
};

/// Reads one frame. Every label with a valid 2D box becomes a TaggedBox2D.
LoadedFrame load_frame(const std::filesystem::path& root, std::string_view frame_id);

}  // namespace pseudolabel
