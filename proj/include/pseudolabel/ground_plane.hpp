#pragma once

#include "pseudolabel/core_types.hpp"
#include "pseudolabel/errors.hpp"

#include <array>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace pseudolabel {

struct RansacConfig {
  int iterations = 200;
  double inlier_threshold = 0.15;  // meters, point-to-plane
  double min_inliers = 0.15;       // fraction of candidate points
  std::uint64_t seed = 0;
  double max_normal_tilt = 30.0 * std::numbers::pi / 180.0;

  void validate() const;
};

struct GroundEstimate {
  Plane plane;
  PointSet ground;
  std::size_t candidate_count = 0;
  std::size_t best_inliers = 0;  // of the winning minimal sample, over candidates
};

/// Inlier fraction fell below min_inliers; carries the best plane found.
class LowConfidenceError : public EstimationError {
 public:
  LowConfidenceError(const std::string& what, Plane best) : EstimationError(what), best_(best) {}
  const Plane& best_plane() const noexcept { return best_; }

 private:
  Plane best_;
};

/// A RANSAC hypothesis: three candidate indices. Rejected samples stay in
/// the list with valid = false so trial indices are stable.
struct PlaneHypothesis {
  Plane plane;
  bool valid = false;
};

/// Candidate pool: points whose y lies in the lower half of the cloud's
/// vertical range (y is down, so the larger half).
std::vector<PointId> ground_candidates(const PointCloud& cloud);

/// Draws cfg.iterations minimal samples from the candidate pool and builds
/// their planes, rejecting degenerate or over-tilted ones. Sequential RNG.
std::vector<PlaneHypothesis> draw_hypotheses(const PointCloud& cloud, std::span<const PointId> candidates,
                                             const RansacConfig& cfg);

/// Inlier count of each hypothesis over `candidates` (0 for invalid ones).
std::vector<std::size_t> score_hypotheses(const PointCloud& cloud, std::span<const PointId> candidates,
                                          std::span<const PlaneHypothesis> hypotheses, double threshold);

namespace serial {
std::vector<std::size_t> score_hypotheses(const PointCloud& cloud, std::span<const PointId> candidates,
                                          std::span<const PlaneHypothesis> hypotheses, double threshold);
}

/// Least-squares plane (smallest-eigenvalue direction of the covariance).
Plane fit_plane_least_squares(const PointCloud& cloud, std::span<const PointId> ids);

GroundEstimate estimate_ground(const PointCloud& cloud, const RansacConfig& cfg);

/// Complement of `ground` within the cloud.
PointSet remove_ground(const PointCloud& cloud, const PointSet& ground);

}  // namespace pseudolabel
