#pragma once

// Geometric primitives shared by the whole pipeline.
//
// Frame convention: camera-rectified (KITTI). x right, y down, z forward.
// The vertical axis is y, so the bird's-eye view (BEV) is the x-z plane and
// "up" is -y. BEV vectors are stored as (x, z).

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace pseudolabel {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Point3 = Vec3;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat4 = Eigen::Matrix4d;

using PointId = std::uint32_t;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

/// Ordered point list; a point's index is its PointId.
struct PointCloud {
  std::vector<Point3> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Point3& operator[](PointId id) const { return points[id]; }
};

/// Sorted, duplicate-free set of ids into one PointCloud.
class PointSet {
 public:
  PointSet() = default;
  /// Sorts and deduplicates.
  explicit PointSet(std::vector<PointId> ids);
  static PointSet all(std::size_t n);
  /// Wraps ids already known to be strictly ascending.
  static PointSet from_sorted(std::vector<PointId> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  bool contains(PointId id) const;
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }
  PointId operator[](std::size_t i) const { return ids_[i]; }
  const std::vector<PointId>& ids() const noexcept { return ids_; }

  PointSet set_union(const PointSet& other) const;
  PointSet intersection(const PointSet& other) const;
  PointSet difference(const PointSet& other) const;
  std::size_t intersection_size(const PointSet& other) const;

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::vector<PointId> ids_;
};

/// {p : normal . p + offset = 0}, normal unit length and pointing up (normal.y < 0).
struct Plane {
  Vec3 normal{0.0, -1.0, 0.0};
  double offset = 0.0;

  /// Normalizes and orients; throws std::invalid_argument on a zero or horizontal-up-ambiguous normal.
  static Plane from(const Vec3& normal, double offset);
  static Plane through(const Vec3& a, const Vec3& b, const Vec3& c);

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
  double distance(const Vec3& p) const;
  /// Vertical (y) coordinate of the plane above/below BEV point (x, z).
  double height_at(double x, double z) const;
  /// Angle between the normal and the vertical axis.
  double tilt() const;
};

struct Box2D {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;

  bool valid() const { return u_min < u_max && v_min < v_max; }
  /// Closed-box membership.
  bool contains(double u, double v) const {
    return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
  }
  friend bool operator==(const Box2D&, const Box2D&) = default;
};

/// Yaw-only oriented box. `center` is the centroid; yaw rotates the length
/// axis from +x towards +z (counterclockwise seen from above).
struct Box3D {
  Point3 center = Point3::Zero();
  double length = 0, width = 0, height = 0;
  double yaw = 0;

  /// length >= width and yaw in [-pi, pi).
  Box3D canonical() const;
  bool valid() const;
  double volume() const { return length * width * height; }
  double y_top() const { return center.y() - height / 2; }
  double y_bottom() const { return center.y() + height / 2; }
  Vec2 length_dir() const;
  /// Footprint corners, counterclockwise in (x, z).
  std::array<Vec2, 4> bev_corners() const;
  /// Bottom face (corners 0-3, same order as bev_corners) then top face.
  std::array<Point3, 8> corners() const;
  static Box3D from_corners(const std::array<Point3, 8>& corners);
};

struct Calibration {
  Mat34 projection = Mat34::Zero();
  Mat4 lidar_to_cam = Mat4::Identity();
  Mat4 rectification = Mat4::Identity();

  double fu() const { return projection(0, 0); }
  double fv() const { return projection(1, 1); }
  double cu() const { return projection(0, 2); }
  double cv() const { return projection(1, 2); }
  /// Optical center in rectified coordinates (null space of the projection).
  Point3 camera_center() const;
  /// Throws std::invalid_argument if rank or orthonormality checks fail.
  void validate() const;

  static Calibration pinhole(double f, double cu, double cv);
};

struct Pixel {
  double u = 0, v = 0;
};

/// Throws ProjectionError for p.z <= 0.
Pixel project_to_image(const Point3& p, const Calibration& calib);

inline Vec2 bev_of(const Point3& p) { return {p.x(), p.z()}; }

}  // namespace pseudolabel
