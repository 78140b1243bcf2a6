#include "pseudolabel/segmentation.hpp"

#include "pseudolabel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pseudolabel {

void SegmentationConfig::validate() const {
  if (phis.empty()) throw std::invalid_argument("phi list must be nonempty");
  for (std::size_t i = 0; i < phis.size(); ++i) {
    if (!(phis[i] > 0)) throw std::invalid_argument("phi values must be > 0");
    if (i > 0 && !(phis[i] > phis[i - 1])) throw std::invalid_argument("phi values must be strictly ascending");
  }
  if (!(theta_seg > 0 && theta_seg <= 1)) throw std::invalid_argument("theta_seg must be in (0, 1]");
}

std::vector<double> SegmentationConfig::sweep(double phi_min, double phi_max, double phi_step) {
  if (!(phi_step > 0) || !(phi_min > 0) || phi_max < phi_min) throw std::invalid_argument("invalid phi sweep");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    // multiply rather than accumulate so 0.1 + 6 * 0.1 stays 0.7
    const double phi = std::round((phi_min + k * phi_step) * 1e9) / 1e9;
    if (phi > phi_max + 1e-9) break;
    out.push_back(phi);
  }
  return out;
}

namespace {

// BFS from seed; appends to `out` and marks `visited`.
void grow_into(PointId seed, const SpatialIndex& index, double phi, std::vector<std::uint8_t>& visited,
               std::vector<PointId>& out) {
  const std::size_t start = out.size();
  visited[seed] = 1;
  out.push_back(seed);
  for (std::size_t head = start; head < out.size(); ++head) {
    const Point3 p = index.cloud()[out[head]];
    index.for_each_within(p, phi, [&](PointId q) {
      if (!visited[q]) {
        visited[q] = 1;
        out.push_back(q);
      }
    });
  }
}

void check_phi(const SpatialIndex& index, double phi) {
  if (phi > index.cell_size()) throw std::invalid_argument("phi exceeds spatial index cell size");
}

}  // namespace

PointSet grow_component(PointId seed, const SpatialIndex& index, double phi) {
  check_phi(index, phi);
  if (!index.active(seed)) throw std::invalid_argument("seed is not an available point");
  std::vector<std::uint8_t> visited(index.cloud().size(), 0);
  std::vector<PointId> out;
  grow_into(seed, index, phi, visited, out);
  return PointSet(std::move(out));
}

ComponentPass grow_all_components(std::span<const PointId> seeds, const SpatialIndex& index, double phi) {
  check_phi(index, phi);
  ComponentPass pass;
  std::vector<std::uint8_t> visited(index.cloud().size(), 0);
  std::vector<PointId> buf;
  for (PointId seed : seeds) {
    if (visited[seed] || !index.active(seed)) continue;
    buf.clear();
    grow_into(seed, index, phi, visited, buf);
    pass.components.emplace_back(buf);
  }
  return pass;
}

PhiPass segment_at_phi(const PointSet& frustum_available, const SpatialIndex& index, double phi,
                       double theta_seg) {
  check_phi(index, phi);
  PhiPass pass;
  std::vector<std::uint8_t> visited(index.cloud().size(), 0);
  std::vector<PointId> buf;
  // seeds ascend, so the first of equally large survivors has the smallest seed
  for (PointId seed : frustum_available) {
    if (visited[seed]) continue;
    buf.clear();
    grow_into(seed, index, phi, visited, buf);
    ++pass.components;
    PointSet component(buf);
    const double inside = static_cast<double>(component.intersection_size(frustum_available));
    if (inside / static_cast<double>(component.size()) < theta_seg) continue;
    if (component.size() > pass.mask.size()) pass.mask = std::move(component);
  }
  return pass;
}

namespace {

SegmentationResult select_best(const std::vector<PhiPass>& passes, const SegmentationConfig& cfg) {
  SegmentationResult result;
  std::size_t best = passes.size();
  for (std::size_t k = 0; k < passes.size(); ++k) {
    result.per_phi_sizes.emplace_back(cfg.phis[k], passes[k].mask.size());
    result.components_examined += passes[k].components;
    if (passes[k].mask.empty()) continue;
    if (best == passes.size() || passes[k].mask.size() > passes[best].mask.size()) best = k;
  }
  if (best == passes.size()) throw SegmentationFailed("every component failed the in-frustum ratio test");
  result.mask = passes[best].mask;
  result.chosen_phi = cfg.phis[best];
  return result;
}

PointSet seeds_of(const FrustumRegion& frustum, const PointSet& available) {
  PointSet seeds = frustum.points.intersection(available);
  if (seeds.empty()) throw SegmentationFailed("no available points in frustum");
  return seeds;
}

}  // namespace

namespace serial {

SegmentationResult segment_vehicle(const FrustumRegion& frustum, const PointSet& available,
                                   const SpatialIndex& index, const SegmentationConfig& cfg) {
  cfg.validate();
  const PointSet seeds = seeds_of(frustum, available);
  std::vector<PhiPass> passes;
  for (double phi : cfg.phis) passes.push_back(segment_at_phi(seeds, index, phi, cfg.theta_seg));
  return select_best(passes, cfg);
}

}  // namespace serial

SegmentationResult segment_vehicle(const FrustumRegion& frustum, const PointSet& available,
                                   const SpatialIndex& index, const SegmentationConfig& cfg) {
  cfg.validate();
  const PointSet seeds = seeds_of(frustum, available);
  std::vector<PhiPass> passes(cfg.phis.size());
  const auto n = static_cast<std::ptrdiff_t>(cfg.phis.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) passes[k] = segment_at_phi(seeds, index, cfg.phis[k], cfg.theta_seg);
  return select_best(passes, cfg);
}

SegmentationResult segment_vehicle(const FrustumRegion& frustum, const PointSet& available,
                                   const PointCloud& cloud, const SegmentationConfig& cfg) {
  cfg.validate();
  const SpatialIndex index(cloud, available, cfg.max_phi());
  return segment_vehicle(frustum, available, index, cfg);
}

std::vector<ObjectSegmentation> process_scene(const PointCloud& cloud, const PointSet& nonground,
                                              std::span<const FrustumRegion> frustums,
                                              const SegmentationConfig& cfg, bool context_removal) {
  cfg.validate();
  std::vector<ObjectSegmentation> out(frustums.size());
  if (frustums.empty()) return out;
  const auto order = order_by_depth(frustums);
  PointSet available = nonground;
  SpatialIndex index(cloud, available, cfg.max_phi());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t obj = order[rank];
    auto& rec = out[obj];
    rec.object = obj;
    rec.rank = rank;
    if (frustums[obj].empty()) {
      rec.failure = "empty frustum";
      continue;
    }
    try {
      rec.result = segment_vehicle(frustums[obj], available, index, cfg);
    } catch (const SegmentationFailed& e) {
      rec.failure = e.what();
      continue;
    }
    if (context_removal) {
      available = available.difference(rec.result->mask);
      index.deactivate(rec.result->mask);
    }
  }
  return out;
}

}  // namespace pseudolabel
