#include "pseudolabel/ground_plane.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pseudolabel {

void RansacConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("ransac iterations must be >= 1");
  if (!(inlier_threshold > 0)) throw std::invalid_argument("ransac inlier threshold must be > 0");
  if (!(min_inliers > 0 && min_inliers <= 1)) throw std::invalid_argument("ransac min_inliers must be in (0, 1]");
  if (!(max_normal_tilt >= 0 && max_normal_tilt < std::numbers::pi / 2)) {
    throw std::invalid_argument("ransac max_normal_tilt must be in [0, pi/2)");
  }
}

std::vector<PointId> ground_candidates(const PointCloud& cloud) {
  std::vector<PointId> ids;
  if (cloud.empty()) return ids;
  double y_min = cloud.points.front().y();
  double y_max = y_min;
  for (const auto& p : cloud.points) {
    y_min = std::min(y_min, p.y());
    y_max = std::max(y_max, p.y());
  }
  const double cut = y_min + 0.5 * (y_max - y_min);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.points[i].y() >= cut) ids.push_back(static_cast<PointId>(i));
  }
  return ids;
}

std::vector<PlaneHypothesis> draw_hypotheses(const PointCloud& cloud, std::span<const PointId> candidates,
                                             const RansacConfig& cfg) {
  std::vector<PlaneHypothesis> out(static_cast<std::size_t>(cfg.iterations));
  if (candidates.size() < 3) return out;
  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = candidates.size();
  std::uniform_int_distribution<std::size_t> pick_a(0, n - 1), pick_b(0, n - 2), pick_c(0, n - 3);
  for (auto& h : out) {
    // three distinct indices without rejection
    const std::size_t a = pick_a(rng);
    std::size_t b = pick_b(rng);
    if (b >= a) ++b;
    std::size_t c = pick_c(rng);
    const std::size_t lo = std::min(a, b), hi = std::max(a, b);
    if (c >= lo) ++c;
    if (c >= hi) ++c;
    const Vec3& pa = cloud[candidates[a]];
    const Vec3& pb = cloud[candidates[b]];
    const Vec3& pc = cloud[candidates[c]];
    const Vec3 n = (pb - pa).cross(pc - pa);
    const double scale = (pb - pa).norm() * (pc - pa).norm();
    if (!(n.norm() > 1e-9 * scale) || scale == 0) continue;
    h.plane = Plane::from(n, -n.dot(pa));
    h.valid = h.plane.tilt() <= cfg.max_normal_tilt;
  }
  return out;
}

namespace {

std::size_t count_inliers(const PointCloud& cloud, std::span<const PointId> candidates, const Plane& plane,
                          double threshold) {
  std::size_t n = 0;
  for (PointId id : candidates) n += plane.distance(cloud[id]) <= threshold ? 1 : 0;
  return n;
}

}  // namespace

namespace serial {

std::vector<std::size_t> score_hypotheses(const PointCloud& cloud, std::span<const PointId> candidates,
                                          std::span<const PlaneHypothesis> hypotheses, double threshold) {
  std::vector<std::size_t> scores(hypotheses.size(), 0);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].valid) scores[i] = count_inliers(cloud, candidates, hypotheses[i].plane, threshold);
  }
  return scores;
}

}  // namespace serial

std::vector<std::size_t> score_hypotheses(const PointCloud& cloud, std::span<const PointId> candidates,
                                          std::span<const PlaneHypothesis> hypotheses, double threshold) {
  std::vector<std::size_t> scores(hypotheses.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(hypotheses.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (hypotheses[i].valid) scores[i] = count_inliers(cloud, candidates, hypotheses[i].plane, threshold);
  }
  return scores;
}

Plane fit_plane_least_squares(const PointCloud& cloud, std::span<const PointId> ids) {
  if (ids.size() < 3) throw EstimationError("least-squares plane needs at least 3 points");
  Vec3 mean = Vec3::Zero();
  for (PointId id : ids) mean += cloud[id];
  mean /= static_cast<double>(ids.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (PointId id : ids) {
    const Vec3 d = cloud[id] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Vec3 n = eig.eigenvectors().col(0);
  return Plane::from(n, -n.dot(mean));
}

namespace {

bool collinear(const PointCloud& cloud, std::span<const PointId> ids) {
  if (ids.size() < 3) return true;
  Vec3 mean = Vec3::Zero();
  for (PointId id : ids) mean += cloud[id];
  mean /= static_cast<double>(ids.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (PointId id : ids) {
    const Vec3 d = cloud[id] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const auto ev = eig.eigenvalues();
  return !(ev(1) > 1e-12 * std::max(ev(2), 1e-300));
}

}  // namespace

GroundEstimate estimate_ground(const PointCloud& cloud, const RansacConfig& cfg) {
  cfg.validate();
  const std::vector<PointId> candidates = ground_candidates(cloud);
  if (collinear(cloud, candidates)) throw EstimationError("degenerate cloud: candidate points are collinear");

  const auto hypotheses = draw_hypotheses(cloud, candidates, cfg);
  const auto scores = score_hypotheses(cloud, candidates, hypotheses, cfg.inlier_threshold);

  std::size_t best = hypotheses.size();
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (!hypotheses[i].valid) continue;
    if (best == hypotheses.size() || scores[i] > scores[best]) best = i;
  }
  if (best == hypotheses.size()) throw EstimationError("no valid ground hypothesis within the tilt limit");

  const Plane minimal = hypotheses[best].plane;
  std::vector<PointId> inliers;
  for (PointId id : candidates) {
    if (minimal.distance(cloud[id]) <= cfg.inlier_threshold) inliers.push_back(id);
  }
  Plane refined = fit_plane_least_squares(cloud, inliers);
  if (refined.tilt() > cfg.max_normal_tilt) refined = minimal;

  const double fraction = static_cast<double>(scores[best]) / static_cast<double>(candidates.size());
  if (fraction < cfg.min_inliers) {
    throw LowConfidenceError("ground inlier fraction " + std::to_string(fraction) + " below minimum", refined);
  }

  GroundEstimate out;
  out.plane = refined;
  out.candidate_count = candidates.size();
  out.best_inliers = scores[best];
  std::vector<PointId> ground;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (refined.distance(cloud.points[i]) <= cfg.inlier_threshold) ground.push_back(static_cast<PointId>(i));
  }
  out.ground = PointSet::from_sorted(std::move(ground));
  return out;
}

PointSet remove_ground(const PointCloud& cloud, const PointSet& ground) {
  return PointSet::all(cloud.size()).difference(ground);
}

}  // namespace pseudolabel
