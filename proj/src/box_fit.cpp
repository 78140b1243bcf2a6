#include "pseudolabel/box_fit.hpp"

#include "pseudolabel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pseudolabel {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double angle_of(const Vec2& v) { return std::atan2(v.y(), v.x()); }

void set_yaw(BevRectangle& r) {
  const Vec2 e0 = r.corner(1) - r.corner(0);
  const Vec2 e1 = r.corner(2) - r.corner(1);
  r.yaw = wrap_angle(angle_of(e0.norm() >= e1.norm() ? e0 : e1));
}

}  // namespace

double BevRectangle::outside_distance(const Vec2& p) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const Vec2 e = corner(i + 1) - corner(i);
    const double len = e.norm();
    if (len == 0) continue;
    // counterclockwise: interior is to the left of each edge
    worst = std::max(worst, -cross(e, p - corner(i)) / len);
  }
  return worst;
}

void RectFitConfig::validate() const {
  if (!(angle_step_deg > 0 && angle_step_deg <= 90)) throw std::invalid_argument("angle step must be in (0, 90]");
  if (!(theta_rect_fraction > 0 && theta_rect_fraction < 1)) {
    throw std::invalid_argument("theta_rect fraction must be in (0, 1)");
  }
  if (!(vertex_stability_eps > 0)) throw std::invalid_argument("vertex stability eps must be > 0");
  if (max_denoise_iters < 1) throw std::invalid_argument("max denoise iterations must be >= 1");
}

std::size_t RectFitConfig::angle_count() const {
  // angles i * step for i * step < 90
  const auto n = static_cast<std::size_t>(std::ceil(90.0 / angle_step_deg - 1e-9));
  return std::max<std::size_t>(n, 1);
}

double RectFitConfig::angle(std::size_t i) const {
  return static_cast<double>(i) * angle_step_deg * std::numbers::pi / 180.0;
}

BevRectangle bounding_rect_at_angle(std::span<const Vec2> q, double angle) {
  if (q.empty()) throw FitError("cannot bound an empty point set");
  const Vec2 u(std::cos(angle), std::sin(angle));
  const Vec2 v(-u.y(), u.x());
  double u_min = std::numeric_limits<double>::infinity(), u_max = -u_min;
  double v_min = u_min, v_max = -u_min;
  for (const auto& p : q) {
    const double a = p.dot(u), b = p.dot(v);
    u_min = std::min(u_min, a);
    u_max = std::max(u_max, a);
    v_min = std::min(v_min, b);
    v_max = std::max(v_max, b);
  }
  BevRectangle r;
  r.corners = {u * u_min + v * v_min, u * u_max + v * v_min, u * u_max + v * v_max, u * u_min + v * v_max};
  set_yaw(r);
  return r;
}

int key_vertex_of(const BevRectangle& rect, std::span<const Vec2> q) {
  int best = 0;
  std::size_t best_count = 0;
  for (int k = 0; k < 4; ++k) {
    // triangle (k-1, k, k+1) = points on corner k's side of the opposite diagonal
    const Vec2 a = rect.corner(k - 1);
    const Vec2 diag = rect.corner(k + 1) - a;
    const double corner_side = cross(diag, rect.corner(k) - a);
    const double tol = 1e-9 * std::max(1.0, diag.squaredNorm());
    std::size_t count = 0;
    for (const auto& p : q) {
      const double s = cross(diag, p - a);
      if (corner_side >= 0 ? s >= -tol : s <= tol) ++count;
    }
    if (k == 0 || count > best_count) {
      best = k;
      best_count = count;
    }
  }
  return best;
}

std::array<double, 2> key_edge_distances(const BevRectangle& rect, const Vec2& p) {
  const Vec2& v = rect.key();
  const auto nb = rect.key_neighbors();
  std::array<double, 2> d{};
  for (int i = 0; i < 2; ++i) {
    const Vec2 e = nb[i] - v;
    const double len = e.norm();
    d[i] = len > 0 ? std::abs(cross(e, p - v)) / len : (p - v).norm();
  }
  return d;
}

double theta_rect_for(const BevRectangle& rect, double fraction) {
  const auto nb = rect.key_neighbors();
  return fraction * std::min((nb[0] - rect.key()).norm(), (nb[1] - rect.key()).norm());
}

std::size_t count_far_points(const BevRectangle& rect, std::span<const Vec2> q, double theta_rect) {
  std::size_t n = 0;
  for (const auto& p : q) {
    const auto d = key_edge_distances(rect, p);
    if (d[0] > theta_rect && d[1] > theta_rect) ++n;
  }
  return n;
}

double key_edge_objective(const BevRectangle& rect, std::span<const Vec2> q, double theta_rect) {
  if (q.empty()) return 0.0;
  return static_cast<double>(count_far_points(rect, q, theta_rect)) / static_cast<double>(q.size());
}

namespace {

AngleScore score_angle(std::span<const Vec2> q, const RectFitConfig& cfg, std::size_t i) {
  AngleScore s;
  s.rect = bounding_rect_at_angle(q, cfg.angle(i));
  s.rect.key_vertex = key_vertex_of(s.rect, q);
  s.area = s.rect.area();
  if (cfg.objective == RectObjective::KeyEdges) {
    s.far_count = count_far_points(s.rect, q, theta_rect_for(s.rect, cfg.theta_rect_fraction));
  }
  return s;
}

bool collinear(std::span<const Vec2> q) {
  if (q.size() < 3) return true;
  Vec2 mean = Vec2::Zero();
  for (const auto& p : q) mean += p;
  mean /= static_cast<double>(q.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : q) {
    const Vec2 d = p - mean;
    sxx += d.x() * d.x();
    sxy += d.x() * d.y();
    syy += d.y() * d.y();
  }
  const double det = sxx * syy - sxy * sxy;
  const double tr = sxx + syy;
  return !(det > 1e-12 * tr * tr) || tr == 0;
}

}  // namespace

namespace serial {

std::vector<AngleScore> sweep_rectangles(std::span<const Vec2> q, const RectFitConfig& cfg) {
  std::vector<AngleScore> out;
  out.reserve(cfg.angle_count());
  for (std::size_t i = 0; i < cfg.angle_count(); ++i) out.push_back(score_angle(q, cfg, i));
  return out;
}

}  // namespace serial

std::vector<AngleScore> sweep_rectangles(std::span<const Vec2> q, const RectFitConfig& cfg) {
  std::vector<AngleScore> out(cfg.angle_count());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score_angle(q, cfg, static_cast<std::size_t>(i));
  return out;
}

std::size_t select_rectangle(std::span<const AngleScore> scores, RectObjective objective) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const auto& a = scores[i];
    const auto& b = scores[best];
    if (objective == RectObjective::KeyEdges && a.far_count != b.far_count) {
      if (a.far_count < b.far_count) best = i;
      continue;
    }
    if (a.area < b.area) best = i;
  }
  return best;
}

BevRectangle fit_rectangle(std::span<const Vec2> q, const RectFitConfig& cfg) {
  cfg.validate();
  if (q.size() < 3) throw FitError("rectangle fit needs at least 3 points");
  if (collinear(q)) throw FitError("rectangle fit on collinear points");
  const auto scores = sweep_rectangles(q, cfg);
  return scores[select_rectangle(scores, cfg.objective)].rect;
}

namespace {

// Points to delete in one denoising round, as sorted positions into `alive`.
std::vector<std::size_t> deletion_set(const BevRectangle& rect, std::span<const Vec2> q,
                                      std::span<const std::size_t> alive, const RectFitConfig& cfg) {
  std::vector<std::size_t> del;
  if (cfg.deletion == DeletionRule::KeyEdgeBand) {
    const double theta = theta_rect_for(rect, cfg.theta_rect_fraction);
    for (std::size_t j = 0; j < alive.size(); ++j) {
      const auto d = key_edge_distances(rect, q[alive[j]]);
      if (d[0] <= theta || d[1] <= theta) del.push_back(j);
    }
    return del;
  }
  // support point of every edge: the point nearest to the edge's line
  for (int e = 0; e < 4; ++e) {
    const Vec2 a = rect.corner(e);
    const Vec2 dir = rect.corner(e + 1) - a;
    const double len = dir.norm();
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < alive.size(); ++j) {
      const Vec2& p = q[alive[j]];
      const double d = len > 0 ? std::abs(cross(dir, p - a)) / len : (p - a).norm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    del.push_back(arg);
  }
  std::sort(del.begin(), del.end());
  del.erase(std::unique(del.begin(), del.end()), del.end());
  return del;
}

// Largest distance from a corner of `a` to the nearest corner of `b`.
double corner_shift(const BevRectangle& a, const BevRectangle& b) {
  double worst = 0;
  for (const auto& c : a.corners) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& d : b.corners) best = std::min(best, (c - d).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

DenoiseResult denoise_key_vertex(std::span<const Vec2> q, const RectFitConfig& cfg) {
  DenoiseResult res;
  res.rect = fit_rectangle(q, cfg);

  std::vector<std::size_t> alive(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) alive[i] = i;
  std::vector<Vec2> subset;

  for (res.rounds = 0; res.rounds < cfg.max_denoise_iters;) {
    const auto del = deletion_set(res.rect, q, alive, cfg);
    if (alive.size() - del.size() < 3) {
      res.stop = DenoiseStop::Floor;
      break;
    }
    std::vector<std::size_t> next_alive, deleted;
    std::size_t di = 0;
    for (std::size_t j = 0; j < alive.size(); ++j) {
      if (di < del.size() && del[di] == j) {
        deleted.push_back(alive[j]);
        ++di;
      } else {
        next_alive.push_back(alive[j]);
      }
    }
    subset.clear();
    for (std::size_t i : next_alive) subset.push_back(q[i]);

    BevRectangle next;
    try {
      next = fit_rectangle(subset, cfg);
    } catch (const FitError&) {
      res.stop = DenoiseStop::Floor;
      break;
    }
    ++res.rounds;
    const double shift = cfg.stability == DenoiseStability::KeyVertex ? (next.key() - res.rect.key()).norm()
                                                                      : corner_shift(res.rect, next);
    if (shift < cfg.vertex_stability_eps) {
      if (cfg.denoise_return == DenoiseReturn::AfterDeletion) {
        res.rect = next;
        res.removed.insert(res.removed.end(), deleted.begin(), deleted.end());
      }
      res.stop = DenoiseStop::Stable;
      std::sort(res.removed.begin(), res.removed.end());
      return res;
    }
    res.removed.insert(res.removed.end(), deleted.begin(), deleted.end());
    alive = std::move(next_alive);
    res.rect = next;
    if (res.rounds == cfg.max_denoise_iters) res.stop = DenoiseStop::Exhausted;
  }
  std::sort(res.removed.begin(), res.removed.end());
  return res;
}

IntersectResult intersect_frustum(const BevRectangle& rect, const BevRay& left, const BevRay& right) {
  IntersectResult out;
  out.rect = rect;
  const Vec2 v = rect.key();
  if (!(left.side(v) < 0 && right.side(v) > 0)) {
    out.degenerate = true;
    return out;
  }
  const auto nb = rect.key_neighbors();
  std::array<Vec2, 2> ends = nb;
  for (int i = 0; i < 2; ++i) {
    const Vec2 edge = nb[i] - v;
    const double extent = edge.norm();
    if (extent == 0) continue;
    const Vec2 e = edge / extent;
    double nearest = std::numeric_limits<double>::infinity();
    for (const BevRay* b : {&left, &right}) {
      // v + s e = o + t d
      const double det = cross(b->direction, e);
      if (std::abs(det) < 1e-12) continue;
      const Vec2 w = b->origin - v;
      const double s = cross(b->direction, w) / det;
      const double t = cross(e, w) / det;
      if (t > 0 && s > extent) nearest = std::min(nearest, s);
    }
    if (std::isfinite(nearest)) {
      ends[i] = v + e * nearest;
      out.extended[i] = true;
    }
  }
  const int k = rect.key_vertex;
  out.rect.corners[k] = v;
  out.rect.corners[(k + 1) % 4] = ends[0];
  out.rect.corners[(k + 3) % 4] = ends[1];
  out.rect.corners[(k + 2) % 4] = ends[0] + ends[1] - v;
  set_yaw(out.rect);
  return out;
}

IntersectResult intersect_frustum(const BevRectangle& rect, const FrustumRegion& frustum) {
  return intersect_frustum(rect, frustum.left_boundary, frustum.right_boundary);
}

Box3D lift_to_3d(const BevRectangle& rect, const PointSet& mask, const PointCloud& cloud,
                 const std::optional<Plane>& ground) {
  if (mask.empty()) throw FitError("cannot lift an empty mask");
  double top = std::numeric_limits<double>::infinity();
  double lowest = -top;
  for (PointId id : mask) {
    top = std::min(top, cloud[id].y());
    lowest = std::max(lowest, cloud[id].y());
  }
  const Vec2 c = rect.center();
  const double bottom = ground ? ground->height_at(c.x(), c.y()) : lowest;
  Box3D box;
  box.height = std::max(bottom - top, 0.5);
  box.center = Point3(c.x(), bottom - box.height / 2, c.y());
  box.length = rect.length();
  box.width = rect.width();
  box.yaw = rect.yaw;
  return box.canonical();
}

bool passes_size_filter(const Box3D& box, const SizeFilter& f) {
  return box.length >= f.min_l && box.length <= f.max_l && box.width >= f.min_w && box.width <= f.max_w &&
         box.height >= f.min_h && box.height <= f.max_h;
}

std::vector<Vec2> bev_points(const PointCloud& cloud, const PointSet& ids) {
  std::vector<Vec2> out;
  out.reserve(ids.size());
  for (PointId id : ids) out.push_back(bev_of(cloud[id]));
  return out;
}

}  // namespace pseudolabel
