#include "pseudolabel/box_fit.hpp"
#include "pseudolabel/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace pseudolabel;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Key-edge objective written out directly: distance to the infinite line through two points.
double objective_direct(const std::array<Vec2, 4>& c, int key, std::span<const Vec2> q, double theta) {
  const Vec2 v = c[key], a = c[(key + 1) % 4], b = c[(key + 3) % 4];
  auto line_dist = [](const Vec2& p, const Vec2& s, const Vec2& t) {
    const Vec2 d = (t - s).normalized();
    const Vec2 r = p - s;
    return (r - d * r.dot(d)).norm();
  };
  std::size_t far = 0;
  for (const auto& p : q) {
    if (line_dist(p, v, a) > theta && line_dist(p, v, b) > theta) ++far;
  }
  return static_cast<double>(far) / static_cast<double>(q.size());
}

bool in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const Eigen::Matrix2d m = (Eigen::Matrix2d() << b - a, c - a).finished();
  const Vec2 w = m.inverse() * (p - a);
  return w.x() >= -1e-9 && w.y() >= -1e-9 && w.x() + w.y() <= 1 + 1e-9;
}

double mod90_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), std::numbers::pi / 2);
  return std::min(d, std::numbers::pi / 2 - d);
}

}  // namespace

TEST_CASE("tight rectangles") {
  const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const BevRectangle r0 = bounding_rect_at_angle(square, 0);
  CHECK(r0.area() == doctest::Approx(1));
  CHECK((r0.corners[0] - Vec2(0, 0)).norm() < 1e-12);
  CHECK((r0.corners[2] - Vec2(1, 1)).norm() < 1e-12);
  CHECK(bounding_rect_at_angle(square, 45 * kDeg).area() == doctest::Approx(2));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> q(20);
    for (auto& p : q) p = Vec2(u(rng), u(rng));
    const BevRectangle r = bounding_rect_at_angle(q, u(rng));
    for (const auto& p : q) CHECK(r.outside_distance(p) <= 1e-9);
    for (int e = 0; e < 4; ++e) {
      const Vec2 a = r.corner(e), d = (r.corner(e + 1) - a).normalized();
      double best = 1e9;
      for (const auto& p : q) best = std::min(best, std::abs(d.x() * (p - a).y() - d.y() * (p - a).x()));
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("key vertex") {
  const std::vector<Vec2> square{{0, 0}, {4, 0}, {4, 2}, {0, 2}};
  const BevRectangle r = bounding_rect_at_angle(square, 0);
  std::vector<Vec2> near_corner2{{4, 2}, {3.9, 1.9}, {3.8, 2}, {4, 1.7}, {0, 0}, {4, 0}, {0, 2}};
  CHECK(key_vertex_of(r, near_corner2) == 2);

  std::vector<Vec2> uniform;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) uniform.emplace_back(0.4 * i, 0.2 * j);
  CHECK(key_vertex_of(r, uniform) == 0);  // symmetric counts: lowest index

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const double angle = u(rng) * std::numbers::pi;
    auto q = testing::l_shape({u(rng) * 10, 10 + u(rng) * 10}, angle, 4, 1.8, 0.05, 0, rng);
    const BevRectangle rect = bounding_rect_at_angle(q, angle);
    int want = 0;
    std::size_t best = 0;
    for (int k = 0; k < 4; ++k) {
      std::size_t n = 0;
      for (const auto& p : q) n += in_triangle(p, rect.corner(k - 1), rect.corner(k), rect.corner(k + 1)) ? 1 : 0;
      if (n > best) {
        best = n;
        want = k;
      }
    }
    const int got = key_vertex_of(rect, q);
    CHECK(got == want);
    CHECK((rect.corner(got) - q.front()).norm() < 1e-9);
  }
}

TEST_CASE("key-edge objective") {
  const std::vector<Vec2> square{{0, 0}, {4, 0}, {4, 2}, {0, 2}};
  BevRectangle r = bounding_rect_at_angle(square, 0);
  r.key_vertex = 0;
  std::vector<Vec2> on_edge{{0, 0}, {1, 0}, {2.5, 0}, {4, 0}};
  CHECK(key_edge_objective(r, on_edge, 0.1) == 0);
  std::vector<Vec2> center(5, Vec2(2, 1));
  CHECK(key_edge_objective(r, center, 0.1) == 1);

  // filled right triangle with legs along x and z from the origin
  std::vector<Vec2> tri;
  for (double x = 0; x <= 4 + 1e-9; x += 0.1)
    for (double z = 0; z <= 4 - x + 1e-9; z += 0.1) tri.emplace_back(x, z);
  BevRectangle legs = bounding_rect_at_angle(tri, 0);
  legs.key_vertex = 0;
  BevRectangle other = legs;
  other.key_vertex = 2;  // same area, key edges far from the mass
  const double theta = 0.4;
  const double f_legs = key_edge_objective(legs, tri, theta), f_other = key_edge_objective(other, tri, theta);
  CHECK(f_legs < f_other);
  CHECK(f_legs == doctest::Approx(objective_direct(legs.corners, 0, tri, theta)));
  CHECK(f_other == doctest::Approx(objective_direct(other.corners, 2, tri, theta)));
}

TEST_CASE("L-shape fit") {
  std::mt19937_64 rng(3);
  const Vec2 corner(2, 15);
  const auto q = testing::l_shape(corner, 30 * kDeg, 4, 1.8, 0.02, 0, rng);
  RectFitConfig cfg;
  const BevRectangle r = fit_rectangle(q, cfg);
  CHECK(mod90_gap(r.yaw, 30 * kDeg) <= cfg.angle_step_deg * kDeg + 1e-9);
  CHECK((r.key() - corner).norm() < 0.05);
  const double theta = theta_rect_for(r, cfg.theta_rect_fraction);
  CHECK(key_edge_objective(r, q, theta) <= 0.05);
  CHECK(key_edge_objective(r, q, theta) == doctest::Approx(objective_direct(r.corners, r.key_vertex, q, theta)));
}

TEST_CASE("rectangle outline") {
  std::vector<Vec2> q;
  for (double s = 0; s < 4 - 1e-9; s += 0.1) {
    q.emplace_back(s, 0);
    q.emplace_back(4 - s, 2);
  }
  for (double s = 0; s < 2 - 1e-9; s += 0.1) {
    q.emplace_back(4, s);
    q.emplace_back(0, 2 - s);
  }
  RectFitConfig cfg;
  const BevRectangle r = fit_rectangle(q, cfg);
  CHECK(mod90_gap(r.yaw, 0) <= cfg.angle_step_deg * kDeg + 1e-9);
  const double theta = theta_rect_for(r, cfg.theta_rect_fraction);
  const double f = objective_direct(r.corners, r.key_vertex, q, theta);
  CHECK(key_edge_objective(r, q, theta) == doctest::Approx(f));
  CHECK(f <= 0.5);
}

TEST_CASE("rotating the input by whole grid steps rotates the fit") {
  std::mt19937_64 rng(4);
  auto q = testing::l_shape({0, 0}, 12 * kDeg, 4, 1.8, 0.05, 0.01, rng);
  RectFitConfig cfg;
  const BevRectangle a = fit_rectangle(q, cfg);
  const double turn = 14 * cfg.angle_step_deg * kDeg;
  const Eigen::Rotation2Dd rot(turn);
  std::vector<Vec2> turned;
  for (const auto& p : q) turned.push_back(rot * p);
  const BevRectangle b = fit_rectangle(turned, cfg);
  CHECK(mod90_gap(b.yaw, a.yaw + turn) < 1e-6);
  CHECK((b.key() - rot * a.key()).norm() < 1e-6);
}

TEST_CASE("selection order: objective, then area, then angle") {
  BevRectangle r;
  std::vector<AngleScore> s(4);
  s[0] = {r, 5, 1.0};
  s[1] = {r, 2, 9.0};
  s[2] = {r, 2, 3.0};
  s[3] = {r, 2, 3.0};
  CHECK(select_rectangle(s, RectObjective::KeyEdges) == 2);
  CHECK(select_rectangle(s, RectObjective::Area) == 0);
}

TEST_CASE("parallel and serial sweeps agree") {
  std::mt19937_64 rng(5);
  auto q = testing::l_shape({3, 20}, 0.7, 4.5, 1.9, 0.01, 0.02, rng);
  RectFitConfig cfg;
  const auto a = sweep_rectangles(q, cfg), b = serial::sweep_rectangles(q, cfg);
  REQUIRE(a.size() == cfg.angle_count());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].far_count == b[i].far_count);
    CHECK(a[i].area == b[i].area);
    CHECK(a[i].rect.key_vertex == b[i].rect.key_vertex);
  }
}

TEST_CASE("degenerate fits throw") {
  RectFitConfig cfg;
  const std::vector<Vec2> two{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(fit_rectangle(two, cfg), FitError);
  const std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(fit_rectangle(line, cfg), FitError);
}

TEST_CASE("denoise on a clean L stops after one check") {
  std::mt19937_64 rng(6);
  const auto q = testing::l_shape({1, 12}, 0.3, 4, 1.8, 0.05, 0, rng);
  RectFitConfig cfg;
  const DenoiseResult d = denoise_key_vertex(q, cfg);
  CHECK(d.rounds == 1);
  CHECK(d.stop == DenoiseStop::Stable);
  CHECK(d.removed.empty());  // the stable fit is the one before deletion
  CHECK((d.rect.key() - fit_rectangle(q, cfg).key()).norm() < 1e-12);

  cfg.denoise_return = DenoiseReturn::AfterDeletion;
  const DenoiseResult after = denoise_key_vertex(q, cfg);
  CHECK(after.rounds == 1);
  CHECK(after.removed.size() <= 4);
  CHECK_FALSE(after.removed.empty());
}

TEST_CASE("denoise recovers the corner despite a far outlier") {
  std::mt19937_64 rng(7);
  const Vec2 corner(0, 15);
  const double angle = 25 * kDeg;
  auto q = testing::l_shape(corner, angle, 4.2, 1.8, 0.05, 0.005, rng);
  // 3 m out, level with the far end of the short side
  q.push_back(corner + Vec2(std::cos(angle), std::sin(angle)) * -3.0 + Vec2(-std::sin(angle), std::cos(angle)) * 1.8);
  RectFitConfig cfg;
  const BevRectangle naive = fit_rectangle(q, cfg);
  const DenoiseResult d = denoise_key_vertex(q, cfg);
  CHECK((naive.key() - corner).norm() > 0.5);
  CHECK((d.rect.key() - corner).norm() < 0.05);
  CHECK(std::find(d.removed.begin(), d.removed.end(), q.size() - 1) != d.removed.end());
}

TEST_CASE("three points are never reduced") {
  const std::vector<Vec2> q{{0, 0}, {2, 0}, {0, 1}};
  RectFitConfig cfg;
  const DenoiseResult d = denoise_key_vertex(q, cfg);
  CHECK(d.stop == DenoiseStop::Floor);
  CHECK(d.removed.empty());
  const BevRectangle f = fit_rectangle(q, cfg);
  for (int i = 0; i < 4; ++i) CHECK((d.rect.corners[i] - f.corners[i]).norm() == 0);
}

TEST_CASE("frustum intersection") {
  // camera at the origin, boundary rays through +-30 degrees
  BevRay left, right;
  left.direction = Vec2(-0.5, std::sqrt(3.0) / 2);
  right.direction = Vec2(0.5, std::sqrt(3.0) / 2);

  // key vertex inside; the +x edge reaches the right boundary, the +z edge
  // runs away from both
  std::vector<Vec2> pts{{0, 10}, {1, 10}, {0, 11}};
  BevRectangle r = bounding_rect_at_angle(pts, 0);
  r.key_vertex = 0;
  const IntersectResult out = intersect_frustum(r, left, right);
  CHECK_FALSE(out.degenerate);
  CHECK(out.extended[0]);
  CHECK_FALSE(out.extended[1]);
  // extended edge along +x ends on the right boundary
  const Vec2 end = out.rect.corner(1);
  CHECK(std::abs(right.side(end)) < 1e-9);
  CHECK(end.x() == doctest::Approx(10 / std::sqrt(3.0)));
  for (const Vec2& c : r.corners) CHECK(out.rect.outside_distance(c) <= 1e-9);

  // idempotent
  const IntersectResult twice = intersect_frustum(out.rect, left, right);
  for (int i = 0; i < 4; ++i) CHECK((twice.rect.corners[i] - out.rect.corners[i]).norm() < 1e-9);

  // key vertex outside the wedge
  BevRectangle outside = r;
  for (auto& c : outside.corners) c += Vec2(20, 0);
  const IntersectResult deg = intersect_frustum(outside, left, right);
  CHECK(deg.degenerate);
  CHECK(deg.rect.corners == outside.corners);

  // a key edge parallel to both boundaries keeps its extent
  BevRay l2 = left, r2 = right;
  l2.direction = r2.direction = Vec2(0, 1);
  l2.origin = Vec2(-5, 0);
  r2.origin = Vec2(5, 0);
  const IntersectResult par = intersect_frustum(r, l2, r2);
  CHECK(par.extended[0]);
  CHECK_FALSE(par.extended[1]);
  CHECK((par.rect.corner(3) - r.corner(3)).norm() < 1e-12);
}

TEST_CASE("lift to 3D") {
  PointCloud c;
  c.points = {{0, 1.65, 10}, {1, 0.15, 10}, {0.5, 1.0, 11}};
  const std::vector<Vec2> bev{{0, 10}, {4, 10}, {4, 11.8}, {0, 11.8}};
  const BevRectangle r = bounding_rect_at_angle(bev, 0);
  const Plane ground = Plane::from({0, -1, 0}, 1.65);
  const Box3D b = lift_to_3d(r, PointSet::all(3), c, ground);
  CHECK(b.height == doctest::Approx(1.5));
  CHECK(b.center.y() == doctest::Approx(1.65 - 0.75));
  CHECK(b.length == doctest::Approx(4));
  CHECK(b.width == doctest::Approx(1.8));

  PointCloud slab;
  slab.points = {{0, 1.6, 10}, {1, 1.62, 10}};
  const Box3D s = lift_to_3d(r, PointSet::all(2), slab, ground);
  CHECK(s.height == doctest::Approx(0.5));

  const Box3D no_plane = lift_to_3d(r, PointSet::all(3), c, std::nullopt);
  CHECK(no_plane.y_bottom() == doctest::Approx(1.65));
}

TEST_CASE("size filter is closed") {
  SizeFilter f;
  Box3D car;
  car.length = 4;
  car.width = 1.8;
  car.height = 1.6;
  CHECK(passes_size_filter(car, f));
  car.length = 15;
  CHECK_FALSE(passes_size_filter(car, f));
  car.length = f.max_l;
  CHECK(passes_size_filter(car, f));
}
