#pragma once

#include "pseudolabel/core_types.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace pseudolabel {

/// Uniform 3D hash grid over a subset of a cloud. Radius queries are exact
/// for radius <= cell_size. Points can be deactivated but not added.
class SpatialIndex {
 public:
  SpatialIndex(const PointCloud& cloud, const PointSet& members, double cell_size);

  double cell_size() const noexcept { return cell_; }
  bool active(PointId id) const { return id < active_.size() && active_[id]; }
  std::size_t active_count() const noexcept { return active_count_; }
  const PointCloud& cloud() const noexcept { return *cloud_; }

  void deactivate(const PointSet& ids);

  /// Calls fn(id) for every active point with |p - center| < radius (strict).
  template <typename F>
  void for_each_within(const Point3& center, double radius, F&& fn) const;

  std::vector<PointId> radius_query(const Point3& center, double radius) const;

 private:
  using Key = std::uint64_t;
  Key key_of(std::int64_t cx, std::int64_t cy, std::int64_t cz) const;
  std::int64_t cell_coord(double v) const;

  const PointCloud* cloud_;
  double cell_;
  std::vector<PointId> sorted_ids_;
  std::unordered_map<Key, std::pair<std::uint32_t, std::uint32_t>> cells_;  // [begin, end) into sorted_ids_
  std::vector<std::uint8_t> active_;
  std::size_t active_count_ = 0;
};

template <typename F>
void SpatialIndex::for_each_within(const Point3& center, double radius, F&& fn) const {
  const double r2 = radius * radius;
  const std::int64_t cx = cell_coord(center.x()), cy = cell_coord(center.y()), cz = cell_coord(center.z());
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        auto it = cells_.find(key_of(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (std::uint32_t i = it->second.first; i < it->second.second; ++i) {
          const PointId id = sorted_ids_[i];
          if (!active_[id]) continue;
          if ((cloud_->points[id] - center).squaredNorm() < r2) fn(id);
        }
      }
    }
  }
}

}  // namespace pseudolabel
