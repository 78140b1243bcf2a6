#pragma once

// Slow, obviously-correct references used by the unit and acceptance tests.

#include "pseudolabel/core_types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using pseudolabel::Box3D;
using pseudolabel::PointCloud;
using pseudolabel::PointId;
using pseudolabel::PointSet;
using pseudolabel::Vec2;

/// Connected components of the graph {i ~ j : |p_i - p_j| < eps} over `ids`,
/// by O(n^2) union-find. Each component sorted; components sorted by first id.
inline std::vector<PointSet> epsilon_components(const PointCloud& cloud, const std::vector<PointId>& ids, double eps) {
  std::vector<std::size_t> parent(ids.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if ((cloud[ids[i]] - cloud[ids[j]]).squaredNorm() < eps * eps) parent[find(i)] = find(j);
    }
  }
  std::vector<std::vector<PointId>> groups(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) groups[find(i)].push_back(ids[i]);
  std::vector<PointSet> out;
  for (auto& g : groups) {
    if (!g.empty()) out.emplace_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const PointSet& a, const PointSet& b) { return a[0] < b[0]; });
  return out;
}

/// Point-in-convex-polygon (counterclockwise, closed).
inline bool in_convex(const std::array<Vec2, 4>& poly, const Vec2& p) {
  for (int i = 0; i < 4; ++i) {
    const Vec2 e = poly[(i + 1) % 4] - poly[i];
    const Vec2 r = p - poly[i];
    if (e.x() * r.y() - e.y() * r.x() < 0) return false;
  }
  return true;
}

struct Estimate {
  double value, sigma;
};

/// Monte-Carlo area of the intersection of two BEV rectangles, sampling
/// their joint bounding box.
inline Estimate monte_carlo_intersection(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b,
                                         std::size_t samples, std::mt19937_64& rng) {
  Vec2 lo = a[0], hi = a[0];
  for (const auto* poly : {&a, &b}) {
    for (const Vec2& p : *poly) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uz(lo.y(), hi.y());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec2 p(ux(rng), uz(rng));
    if (in_convex(a, p) && in_convex(b, p)) ++hits;
  }
  const double area = (hi.x() - lo.x()) * (hi.y() - lo.y());
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  return {area * frac, area * std::sqrt(frac * (1 - frac) / static_cast<double>(samples))};
}

/// 3D IoU of two axis-aligned boxes (yaw 0 or pi/2) by interval arithmetic.
inline double axis_aligned_iou(const Box3D& a, const Box3D& b) {
  auto extent = [](const Box3D& box, int axis) {
    const bool turned = std::abs(std::sin(box.yaw)) > 0.5;
    double half;
    double c;
    if (axis == 0) {
      half = (turned ? box.width : box.length) / 2;
      c = box.center.x();
    } else if (axis == 1) {
      half = box.height / 2;
      c = box.center.y();
    } else {
      half = (turned ? box.length : box.width) / 2;
      c = box.center.z();
    }
    return std::array<double, 2>{c - half, c + half};
  };
  double inter = 1;
  for (int axis = 0; axis < 3; ++axis) {
    const auto ea = extent(a, axis), eb = extent(b, axis);
    inter *= std::max(0.0, std::min(ea[1], eb[1]) - std::max(ea[0], eb[0]));
  }
  return inter / (a.volume() + b.volume() - inter);
}

}  // namespace oracle
