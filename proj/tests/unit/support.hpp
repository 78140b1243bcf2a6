#pragma once

#include "pseudolabel/core_types.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

using pseudolabel::Point3;
using pseudolabel::Vec2;

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pseudolabel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Two perpendicular point runs meeting at `corner`, along angle and angle + 90 deg.
inline std::vector<Vec2> l_shape(const Vec2& corner, double angle, double len_a, double len_b, double spacing,
                                 double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
  const Vec2 a(std::cos(angle), std::sin(angle)), b(-std::sin(angle), std::cos(angle));
  std::vector<Vec2> q;
  for (double s = 0; s <= len_a + 1e-9; s += spacing) q.push_back(corner + a * s);
  for (double s = spacing; s <= len_b + 1e-9; s += spacing) q.push_back(corner + b * s);
  if (sigma > 0) {
    for (auto& p : q) p += Vec2(noise(rng), noise(rng));
  }
  return q;
}

}  // namespace testing
