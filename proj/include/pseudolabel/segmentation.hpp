#pragma once

// Context-aware adaptive region growing.
//
// For every distance threshold phi, frustum points seed connected components
// grown over all available points (neighbors: distance < phi). Components
// mostly outside the frustum are dropped, the largest survivor is the mask
// for that phi, and the largest mask over all phis wins. Vehicles are handled
// nearest-first and each accepted mask is removed from the available points.

#include "pseudolabel/core_types.hpp"
#include "pseudolabel/frustum.hpp"
#include "pseudolabel/spatial_index.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pseudolabel {

struct SegmentationConfig {
  std::vector<double> phis{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  double theta_seg = 0.8;

  void validate() const;
  double max_phi() const { return phis.back(); }
  /// Ascending sweep phi_min, phi_min + step, ... <= phi_max (with 1e-9 slack).
  static std::vector<double> sweep(double phi_min, double phi_max, double phi_step);
};

struct SegmentationResult {
  PointSet mask;
  double chosen_phi = 0;
  std::vector<std::pair<double, std::size_t>> per_phi_sizes;
  std::size_t components_examined = 0;
};

/// Component of `seed` over the index's active points under distance < phi.
PointSet grow_component(PointId seed, const SpatialIndex& index, double phi);

/// Components of one phi pass: one per unvisited seed, in seed order.
struct ComponentPass {
  std::vector<PointSet> components;
};
ComponentPass grow_all_components(std::span<const PointId> seeds, const SpatialIndex& index, double phi);

/// Best surviving component for one phi; empty mask if all were filtered.
struct PhiPass {
  PointSet mask;
  std::size_t components = 0;
};
PhiPass segment_at_phi(const PointSet& frustum_available, const SpatialIndex& index, double phi,
                       double theta_seg);

/// Segments one vehicle. `index` must cover exactly `available` and have cell
/// size >= cfg.max_phi(). Throws SegmentationFailed.
SegmentationResult segment_vehicle(const FrustumRegion& frustum, const PointSet& available,
                                   const SpatialIndex& index, const SegmentationConfig& cfg);
SegmentationResult segment_vehicle(const FrustumRegion& frustum, const PointSet& available,
                                   const PointCloud& cloud, const SegmentationConfig& cfg);

namespace serial {
SegmentationResult segment_vehicle(const FrustumRegion& frustum, const PointSet& available,
                                   const SpatialIndex& index, const SegmentationConfig& cfg);
}

struct ObjectSegmentation {
  std::size_t object = 0;  // index into the frustum list
  std::size_t rank = 0;    // position in the depth order
  std::optional<SegmentationResult> result;
  std::string failure;
};

/// Results in input order. With context_removal off every vehicle sees the
/// full `nonground` set.
std::vector<ObjectSegmentation> process_scene(const PointCloud& cloud, const PointSet& nonground,
                                              std::span<const FrustumRegion> frustums,
                                              const SegmentationConfig& cfg, bool context_removal = true);

}  // namespace pseudolabel
