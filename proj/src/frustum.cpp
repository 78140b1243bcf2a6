#include "pseudolabel/frustum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pseudolabel {

double BevRay::side(const Vec2& p) const {
  const Vec2 r = p - origin;
  return direction.x() * r.y() - direction.y() * r.x();
}

bool FrustumRegion::contains_bev(const Vec2& p) const {
  // left boundary is further counterclockwise than the right one
  return left_boundary.side(p) < 0 && right_boundary.side(p) > 0;
}

BevRay boundary_ray(double u, const Calibration& calib) {
  // Rays projecting to column u span the plane (row0 - u * row2) . [p; 1] = 0.
  const Eigen::RowVector4d plane = calib.projection.row(0) - u * calib.projection.row(2);
  // BEV trace of that plane, assuming it contains the vertical axis.
  Vec2 dir(plane(2), -plane(0));
  if (dir.y() < 0) dir = -dir;
  BevRay ray;
  ray.origin = bev_of(calib.camera_center());
  ray.direction = dir.normalized();
  return ray;
}

namespace {

bool inside(const Point3& p, const Box2D& box2d, const Calibration& calib) {
  if (!(p.z() > 0)) return false;
  const Pixel px = project_to_image(p, calib);
  return box2d.contains(px.u, px.v);
}

}  // namespace

namespace serial {

std::vector<PointId> frustum_members(const PointCloud& cloud, std::span<const PointId> candidates,
                                     const Box2D& box2d, const Calibration& calib) {
  std::vector<PointId> out;
  for (PointId id : candidates) {
    if (inside(cloud[id], box2d, calib)) out.push_back(id);
  }
  return out;
}

}  // namespace serial

std::vector<PointId> frustum_members(const PointCloud& cloud, std::span<const PointId> candidates,
                                     const Box2D& box2d, const Calibration& calib) {
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
  std::vector<unsigned char> flags(candidates.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) flags[i] = inside(cloud[candidates[i]], box2d, calib) ? 1 : 0;
  std::vector<PointId> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (flags[i]) out.push_back(candidates[i]);
  }
  return out;
}

std::optional<double> median_z(const PointCloud& cloud, const PointSet& ids) {
  if (ids.empty()) return std::nullopt;
  std::vector<double> z;
  z.reserve(ids.size());
  for (PointId id : ids) z.push_back(cloud[id].z());
  std::sort(z.begin(), z.end());
  const std::size_t m = z.size() / 2;
  return z.size() % 2 ? z[m] : 0.5 * (z[m - 1] + z[m]);
}

FrustumRegion extract_frustum(const PointCloud& cloud, const PointSet& nonground, const Box2D& box2d,
                              const Calibration& calib) {
  FrustumRegion f;
  f.box2d = box2d;
  f.points = PointSet::from_sorted(frustum_members(cloud, nonground.ids(), box2d, calib));
  f.left_boundary = boundary_ray(box2d.u_min, calib);
  f.right_boundary = boundary_ray(box2d.u_max, calib);
  f.median_depth = median_z(cloud, f.points);
  return f;
}

std::vector<std::size_t> order_by_depth(std::span<const FrustumRegion> frustums) {
  std::vector<std::size_t> order(frustums.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& fa = frustums[a];
    const auto& fb = frustums[b];
    if (fa.median_depth.has_value() != fb.median_depth.has_value()) return fa.median_depth.has_value();
    if (fa.median_depth && *fa.median_depth != *fb.median_depth) return *fa.median_depth < *fb.median_depth;
    if (fa.box2d.u_min != fb.box2d.u_min) return fa.box2d.u_min < fb.box2d.u_min;
    return a < b;
  });
  return order;
}

}  // namespace pseudolabel
