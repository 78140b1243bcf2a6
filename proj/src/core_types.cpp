#include "pseudolabel/core_types.hpp"

#include "pseudolabel/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>

namespace pseudolabel {

double wrap_angle(double radians) {
  constexpr double two_pi = 2 * std::numbers::pi;
  double r = std::fmod(radians + std::numbers::pi, two_pi);
  if (r < 0) r += two_pi;
  r -= std::numbers::pi;
  // fmod rounding can land exactly on +pi
  if (r >= std::numbers::pi) r -= two_pi;
  return r;
}

// ---------------------------------------------------------------- PointSet

PointSet::PointSet(std::vector<PointId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

PointSet PointSet::all(std::size_t n) {
  PointSet s;
  s.ids_.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.ids_[i] = static_cast<PointId>(i);
  return s;
}

PointSet PointSet::from_sorted(std::vector<PointId> ids) {
  PointSet s;
  s.ids_ = std::move(ids);
  return s;
}

bool PointSet::contains(PointId id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

PointSet PointSet::set_union(const PointSet& other) const {
  PointSet out;
  std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                 std::back_inserter(out.ids_));
  return out;
}

PointSet PointSet::intersection(const PointSet& other) const {
  PointSet out;
  std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                        std::back_inserter(out.ids_));
  return out;
}

PointSet PointSet::difference(const PointSet& other) const {
  PointSet out;
  std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                      std::back_inserter(out.ids_));
  return out;
}

std::size_t PointSet::intersection_size(const PointSet& other) const {
  std::size_t n = 0;
  auto a = ids_.begin();
  auto b = other.ids_.begin();
  while (a != ids_.end() && b != other.ids_.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++n;
      ++a;
      ++b;
    }
  }
  return n;
}

// ------------------------------------------------------------------- Plane

Plane Plane::from(const Vec3& normal, double offset) {
  const double norm = normal.norm();
  if (!(norm > 0) || !std::isfinite(norm)) throw std::invalid_argument("plane normal must be nonzero");
  Plane p{normal / norm, offset / norm};
  if (p.normal.y() > 0) {
    p.normal = -p.normal;
    p.offset = -p.offset;
  }
  return p;
}

Plane Plane::through(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  return from(n, -n.dot(a));
}

double Plane::distance(const Vec3& p) const { return std::abs(signed_distance(p)); }

double Plane::height_at(double x, double z) const {
  return -(normal.x() * x + normal.z() * z + offset) / normal.y();
}

double Plane::tilt() const { return std::acos(std::clamp(-normal.y(), -1.0, 1.0)); }

// ------------------------------------------------------------------- Box3D

Box3D Box3D::canonical() const {
  Box3D b = *this;
  if (b.width > b.length) {
    std::swap(b.width, b.length);
    b.yaw += std::numbers::pi / 2;
  }
  b.yaw = wrap_angle(b.yaw);
  return b;
}

bool Box3D::valid() const {
  return length >= width && width > 0 && height > 0 && yaw >= -std::numbers::pi &&
         yaw < std::numbers::pi && center.allFinite();
}

Vec2 Box3D::length_dir() const { return {std::cos(yaw), std::sin(yaw)}; }

std::array<Vec2, 4> Box3D::bev_corners() const {
  const Vec2 c = bev_of(center);
  const Vec2 d = length_dir() * (length / 2);
  const Vec2 n = Vec2(-std::sin(yaw), std::cos(yaw)) * (width / 2);
  return {c - d - n, c + d - n, c + d + n, c - d + n};
}

std::array<Point3, 8> Box3D::corners() const {
  const auto bev = bev_corners();
  std::array<Point3, 8> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = Point3(bev[i].x(), y_bottom(), bev[i].y());
    out[i + 4] = Point3(bev[i].x(), y_top(), bev[i].y());
  }
  return out;
}

Box3D Box3D::from_corners(const std::array<Point3, 8>& corners) {
  Box3D b;
  b.center = Point3::Zero();
  for (const auto& c : corners) b.center += c;
  b.center /= 8.0;
  const Vec2 e0 = bev_of(corners[1]) - bev_of(corners[0]);
  const Vec2 e1 = bev_of(corners[2]) - bev_of(corners[1]);
  b.length = e0.norm();
  b.width = e1.norm();
  b.height = corners[0].y() - corners[4].y();
  b.yaw = std::atan2(e0.y(), e0.x());
  return b.canonical();
}

// ------------------------------------------------------------- Calibration

Point3 Calibration::camera_center() const {
  const Eigen::Matrix3d m = projection.leftCols<3>();
  return m.fullPivLu().solve(-projection.col(3));
}

void Calibration::validate() const {
  Eigen::FullPivLU<Mat34> lu(projection);
  if (lu.rank() != 3) throw std::invalid_argument("projection matrix must have rank 3");
  auto check_rotation = [](const Mat4& t, const char* name) {
    const Eigen::Matrix3d r = t.topLeftCorner<3, 3>();
    if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
      throw std::invalid_argument(std::string(name) + " rotation block is not orthonormal");
    }
  };
  check_rotation(lidar_to_cam, "lidar_to_cam");
  check_rotation(rectification, "rectification");
}

Calibration Calibration::pinhole(double f, double cu, double cv) {
  Calibration c;
  c.projection << f, 0, cu, 0, 0, f, cv, 0, 0, 0, 1, 0;
  return c;
}

Pixel project_to_image(const Point3& p, const Calibration& calib) {
  if (!(p.z() > 0)) throw ProjectionError("point behind camera cannot be projected");
  const Eigen::Vector3d h = calib.projection * p.homogeneous();
  return {h.x() / h.z(), h.y() / h.z()};
}

}  // namespace pseudolabel
