#pragma once

#include "pseudolabel/core_types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace pseudolabel {

/// Half-line in BEV starting at the camera center.
struct BevRay {
  Vec2 origin = Vec2::Zero();
  Vec2 direction{0.0, 1.0};  // unit, positive z component

  /// > 0 when p is counterclockwise of the ray (towards -x for a ray along +z).
  double side(const Vec2& p) const;
};

struct FrustumRegion {
  Box2D box2d;
  PointSet points;
  BevRay left_boundary;   // through u_min
  BevRay right_boundary;  // through u_max
  std::optional<double> median_depth;

  bool empty() const { return points.empty(); }
  /// Strictly between the two boundary lines in BEV.
  bool contains_bev(const Vec2& p) const;
};

/// BEV trace of the vertical plane back-projected from image column u.
BevRay boundary_ray(double u, const Calibration& calib);

/// Closed-box membership test for each id in `candidates`.
std::vector<PointId> frustum_members(const PointCloud& cloud, std::span<const PointId> candidates,
                                     const Box2D& box2d, const Calibration& calib);

namespace serial {
std::vector<PointId> frustum_members(const PointCloud& cloud, std::span<const PointId> candidates,
                                     const Box2D& box2d, const Calibration& calib);
}

FrustumRegion extract_frustum(const PointCloud& cloud, const PointSet& nonground, const Box2D& box2d,
                              const Calibration& calib);

/// Ascending median depth, empty frustums last; ties by u_min then input index.
std::vector<std::size_t> order_by_depth(std::span<const FrustumRegion> frustums);

std::optional<double> median_z(const PointCloud& cloud, const PointSet& ids);

}  // namespace pseudolabel
