#include "pseudolabel/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pseudolabel {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void box_path(std::ostringstream& out, const Box3D& box, const Viewport& vp, const char* color) {
  const auto corners = box.bev_corners();
  out << "<path d=\"";
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const Vec2 p = vp.to_pixel(corners[i]);
    out << (i == 0 ? "M" : " L") << fmt(p.x()) << ',' << fmt(p.y());
  }
  out << " Z\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
}

// Clips the ray to the viewport rectangle (in world units).
bool clip_ray(const BevRay& ray, const Viewport& vp, Vec2& a, Vec2& b) {
  double t0 = 0, t1 = 1e6;
  const double lo[2] = {vp.x_min, vp.z_min}, hi[2] = {vp.x_max, vp.z_max};
  for (int k = 0; k < 2; ++k) {
    const double o = ray.origin[k], d = ray.direction[k];
    if (std::abs(d) < 1e-12) {
      if (o < lo[k] || o > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - o) / d, tb = (hi[k] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return false;
  a = ray.origin + ray.direction * t0;
  b = ray.origin + ray.direction * t1;
  return true;
}

}  // namespace

std::string render_bev_svg(const BevFigure& fig, const Viewport& vp) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(vp.width()) << "\" height=\""
      << fmt(vp.height()) << "\" viewBox=\"0 0 " << fmt(vp.width()) << ' ' << fmt(vp.height()) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes through the camera origin, clipped to the view.
  out << "<g class=\"axes\" stroke=\"#555555\" stroke-width=\"1\">\n";
  const double ax = std::clamp(0.0, vp.x_min, vp.x_max);
  const double az = std::clamp(0.0, vp.z_min, vp.z_max);
  const Vec2 xa = vp.to_pixel({vp.x_min, az}), xb = vp.to_pixel({vp.x_max, az});
  const Vec2 za = vp.to_pixel({ax, vp.z_min}), zb = vp.to_pixel({ax, vp.z_max});
  out << "<line x1=\"" << fmt(xa.x()) << "\" y1=\"" << fmt(xa.y()) << "\" x2=\"" << fmt(xb.x()) << "\" y2=\""
      << fmt(xb.y()) << "\"/>\n";
  out << "<line x1=\"" << fmt(za.x()) << "\" y1=\"" << fmt(za.y()) << "\" x2=\"" << fmt(zb.x()) << "\" y2=\""
      << fmt(zb.y()) << "\"/>\n";
  out << "</g>\n";
  out << "<text x=\"" << fmt(xb.x() - 12) << "\" y=\"" << fmt(xb.y() - 4) << "\" font-size=\"12\">x</text>\n";
  out << "<text x=\"" << fmt(zb.x() + 4) << "\" y=\"" << fmt(zb.y() + 12) << "\" font-size=\"12\">z</text>\n";

  if (!fig.cloud.empty()) {
    const std::size_t n = fig.cloud.size();
    const std::size_t stride = fig.max_points > 0 ? std::max<std::size_t>(1, (n + fig.max_points - 1) / fig.max_points) : 1;
    out << "<g class=\"points\" fill=\"#7f8c8d\">\n";
    for (std::size_t i = 0; i < n; i += stride) {
      const Vec2 b = bev_of(fig.cloud.points[i]);
      if (b.x() < vp.x_min || b.x() > vp.x_max || b.y() < vp.z_min || b.y() > vp.z_max) continue;
      const Vec2 p = vp.to_pixel(b);
      out << "<circle cx=\"" << fmt(p.x()) << "\" cy=\"" << fmt(p.y()) << "\" r=\"0.8\"/>\n";
    }
    out << "</g>\n";
  }

  for (const auto& ray : fig.frustum_lines) {
    Vec2 a, b;
    if (!clip_ray(ray, vp, a, b)) continue;
    const Vec2 pa = vp.to_pixel(a), pb = vp.to_pixel(b);
    out << "<line x1=\"" << fmt(pa.x()) << "\" y1=\"" << fmt(pa.y()) << "\" x2=\"" << fmt(pb.x()) << "\" y2=\""
        << fmt(pb.y()) << "\" stroke=\"" << kFrustumColor << "\" stroke-width=\"1\"/>\n";
  }
  for (const auto& b : fig.gt) box_path(out, b, vp, kGtColor);
  for (const auto& b : fig.pred) box_path(out, b, vp, kPredColor);
  for (const auto& v : fig.key_vertices) {
    const Vec2 p = vp.to_pixel(v);
    out << "<circle cx=\"" << fmt(p.x()) << "\" cy=\"" << fmt(p.y()) << "\" r=\"4\" fill=\"" << kKeyVertexColor
        << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace pseudolabel
