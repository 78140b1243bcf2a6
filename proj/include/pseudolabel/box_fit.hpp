#pragma once

// BEV box estimation from a segmented vehicle mask.
//
// A rectangle's key vertex is the corner whose half-rectangle triangle holds
// the most points; its two incident edges are the key edges. Rectangles are
// scored by the fraction of points farther than theta_rect from both key-edge
// lines (lower is better) over a grid of orientations in [0, 90) degrees.

#include "pseudolabel/core_types.hpp"
#include "pseudolabel/frustum.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace pseudolabel {

struct BevRectangle {
  std::array<Vec2, 4> corners;  // counterclockwise
  int key_vertex = 0;
  double yaw = 0;  // direction of the longer edge

  const Vec2& key() const { return corners[key_vertex]; }
  const Vec2& corner(int i) const { return corners[((i % 4) + 4) % 4]; }
  /// Corners adjacent to the key vertex: {next, previous}.
  std::array<Vec2, 2> key_neighbors() const { return {corner(key_vertex + 1), corner(key_vertex - 1)}; }
  double edge_length(int i) const { return (corner(i + 1) - corner(i)).norm(); }
  double length() const { return std::max(edge_length(0), edge_length(1)); }
  double width() const { return std::min(edge_length(0), edge_length(1)); }
  double area() const { return edge_length(0) * edge_length(1); }
  Vec2 center() const { return (corners[0] + corners[1] + corners[2] + corners[3]) / 4.0; }
  /// Largest signed distance of p outside any edge (<= 0 means inside).
  double outside_distance(const Vec2& p) const;
};

enum class RectObjective { KeyEdges, Area };
enum class DeletionRule { EdgeSupport, KeyEdgeBand };
enum class DenoiseReturn { BeforeDeletion, AfterDeletion };
enum class DenoiseStop { Stable, Floor, Exhausted };
/// What must stay put between rounds for denoising to stop.
enum class DenoiseStability { KeyVertex, AllCorners };

struct SizeFilter {
  double min_l = 2.0, max_l = 7.0;
  double min_w = 1.0, max_w = 3.0;
  double min_h = 0.5, max_h = 3.0;
};

struct RectFitConfig {
  double angle_step_deg = 0.5;
  double theta_rect_fraction = 0.1;
  double vertex_stability_eps = 0.01;
  int max_denoise_iters = 20;
  RectObjective objective = RectObjective::KeyEdges;
  DeletionRule deletion = DeletionRule::EdgeSupport;
  DenoiseReturn denoise_return = DenoiseReturn::BeforeDeletion;
  DenoiseStability stability = DenoiseStability::KeyVertex;
  SizeFilter size_filter;

  void validate() const;
  std::size_t angle_count() const;
  double angle(std::size_t i) const;  // radians
};

/// Tight rectangle of q in the frame rotated by `angle`; key_vertex left at 0.
BevRectangle bounding_rect_at_angle(std::span<const Vec2> q, double angle);

int key_vertex_of(const BevRectangle& rect, std::span<const Vec2> q);

/// Perpendicular distances of p to the two key-edge support lines.
std::array<double, 2> key_edge_distances(const BevRectangle& rect, const Vec2& p);

/// theta_rect for a rectangle: fraction times the shorter key edge.
double theta_rect_for(const BevRectangle& rect, double fraction);

/// Number of points farther than theta_rect from both key-edge lines.
std::size_t count_far_points(const BevRectangle& rect, std::span<const Vec2> q, double theta_rect);
double key_edge_objective(const BevRectangle& rect, std::span<const Vec2> q, double theta_rect);

struct AngleScore {
  BevRectangle rect;
  std::size_t far_count = 0;
  double area = 0;
};

/// One entry per grid angle.
std::vector<AngleScore> sweep_rectangles(std::span<const Vec2> q, const RectFitConfig& cfg);

namespace serial {
std::vector<AngleScore> sweep_rectangles(std::span<const Vec2> q, const RectFitConfig& cfg);
}

/// Index of the winning entry: minimum objective, then minimum area, then
/// smallest angle. The Area objective skips the first criterion.
std::size_t select_rectangle(std::span<const AngleScore> scores, RectObjective objective);

/// Throws FitError for fewer than 3 points or collinear input.
BevRectangle fit_rectangle(std::span<const Vec2> q, const RectFitConfig& cfg);

struct DenoiseResult {
  BevRectangle rect;
  std::vector<std::size_t> removed;  // indices into q, ascending
  int rounds = 0;
  DenoiseStop stop = DenoiseStop::Stable;
};

DenoiseResult denoise_key_vertex(std::span<const Vec2> q, const RectFitConfig& cfg);

struct IntersectResult {
  BevRectangle rect;
  std::array<bool, 2> extended{false, false};  // per key edge {next, previous}
  bool degenerate = false;                     // key vertex outside the frustum wedge
};

IntersectResult intersect_frustum(const BevRectangle& rect, const BevRay& left, const BevRay& right);
IntersectResult intersect_frustum(const BevRectangle& rect, const FrustumRegion& frustum);

/// Bottom from the ground plane (or the lowest mask point without one), top
/// from the highest mask point, height clamped to >= 0.5 m.
Box3D lift_to_3d(const BevRectangle& rect, const PointSet& mask, const PointCloud& cloud,
                 const std::optional<Plane>& ground);

bool passes_size_filter(const Box3D& box, const SizeFilter& filter);

std::vector<Vec2> bev_points(const PointCloud& cloud, const PointSet& ids);

}  // namespace pseudolabel
