#pragma once

// Bird's-eye-view SVG figures: points, GT and predicted boxes, frustum
// boundaries and key vertices.

#include "pseudolabel/core_types.hpp"
#include "pseudolabel/frustum.hpp"

#include <string>
#include <vector>

namespace pseudolabel {

inline constexpr const char* kGtColor = "#f1c40f";
inline constexpr const char* kPredColor = "#8e44ad";
inline constexpr const char* kFrustumColor = "#00bcd4";
inline constexpr const char* kKeyVertexColor = "#2ecc71";

/// World BEV (x, z) -> SVG pixels. x grows right, z grows up the page.
struct Viewport {
  double x_min = -30, x_max = 30, z_min = 0, z_max = 60;
  double pixels_per_meter = 10;
  double margin = 20;

  double width() const { return (x_max - x_min) * pixels_per_meter + 2 * margin; }
  double height() const { return (z_max - z_min) * pixels_per_meter + 2 * margin; }
  Vec2 to_pixel(const Vec2& bev) const {
    return {margin + (bev.x() - x_min) * pixels_per_meter, margin + (z_max - bev.y()) * pixels_per_meter};
  }
};

struct BevFigure {
  PointCloud cloud;
  std::vector<Box3D> gt;
  std::vector<Box3D> pred;
  std::vector<BevRay> frustum_lines;
  std::vector<Vec2> key_vertices;
  std::size_t max_points = 30000;  // evenly decimated beyond this
};

std::string render_bev_svg(const BevFigure& figure, const Viewport& viewport = {});

}  // namespace pseudolabel
