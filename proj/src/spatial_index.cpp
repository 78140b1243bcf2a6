#include "pseudolabel/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pseudolabel {

namespace {
// 21 bits per axis, offset so negative cells stay positive
constexpr std::int64_t kAxisBias = 1 << 20;
constexpr std::uint64_t kAxisMask = (1u << 21) - 1;
}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud, const PointSet& members, double cell_size)
    : cloud_(&cloud), cell_(cell_size), active_(cloud.size(), 0) {
  if (!(cell_size > 0)) throw std::invalid_argument("spatial index cell size must be > 0");
  std::vector<std::pair<Key, PointId>> keyed;
  keyed.reserve(members.size());
  for (PointId id : members) {
    const auto& p = cloud.points[id];
    keyed.emplace_back(key_of(cell_coord(p.x()), cell_coord(p.y()), cell_coord(p.z())), id);
    active_[id] = 1;
  }
  active_count_ = members.size();
  std::sort(keyed.begin(), keyed.end());
  sorted_ids_.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      sorted_ids_.push_back(keyed[j].second);
      ++j;
    }
    cells_.emplace(keyed[i].first, std::make_pair(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)));
    i = j;
  }
}

void SpatialIndex::deactivate(const PointSet& ids) {
  for (PointId id : ids) {
    if (id < active_.size() && active_[id]) {
      active_[id] = 0;
      --active_count_;
    }
  }
}

std::vector<PointId> SpatialIndex::radius_query(const Point3& center, double radius) const {
  if (radius > cell_) throw std::invalid_argument("radius exceeds spatial index cell size");
  std::vector<PointId> out;
  for_each_within(center, radius, [&](PointId id) { out.push_back(id); });
  std::sort(out.begin(), out.end());
  return out;
}

SpatialIndex::Key SpatialIndex::key_of(std::int64_t cx, std::int64_t cy, std::int64_t cz) const {
  auto enc = [](std::int64_t c) { return static_cast<std::uint64_t>(c + kAxisBias) & kAxisMask; };
  return (enc(cx) << 42) | (enc(cy) << 21) | enc(cz);
}

std::int64_t SpatialIndex::cell_coord(double v) const {
  return static_cast<std::int64_t>(std::floor(v / cell_));
}

}  // namespace pseudolabel
