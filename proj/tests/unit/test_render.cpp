#include "pseudolabel/render.hpp"

#include <doctest.h>

#include <regex>

using namespace pseudolabel;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("an empty figure is a valid SVG with axes") {
  const std::string svg = render_bev_svg({});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("class=\"axes\"") != std::string::npos);
  CHECK(count(svg, "<path") == 0);
}

TEST_CASE("one GT box is one closed path in the GT colour at the mapped pixels") {
  BevFigure fig;
  Box3D b;
  b.center = {3, 1, 20};
  b.length = 4;
  b.width = 1.8;
  b.height = 1.5;
  b.yaw = 0.5;
  fig.gt.push_back(b);
  const Viewport vp;
  const std::string svg = render_bev_svg(fig, vp);
  CHECK(count(svg, std::string("stroke=\"") + kGtColor + "\"") == 1);
  CHECK(count(svg, "<path") == 1);

  const std::regex path_re("<path d=\"([^\"]*)\"");
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, path_re));
  const std::string d = m[1];
  CHECK(d.back() == 'Z');
  const std::regex num_re("(-?[0-9]+\\.?[0-9]*)[ ,](-?[0-9]+\\.?[0-9]*)");
  std::vector<Vec2> pts;
  for (auto it = std::sregex_iterator(d.begin(), d.end(), num_re); it != std::sregex_iterator(); ++it) {
    pts.emplace_back(std::stod((*it)[1]), std::stod((*it)[2]));
  }
  REQUIRE(pts.size() == 4);
  const auto corners = b.bev_corners();
  for (int i = 0; i < 4; ++i) {
    // independent affine map: 10 px/m, 20 px margin, x from -30, z flipped from 60
    const Vec2 want(20 + (corners[i].x() + 30) * 10, 20 + (60 - corners[i].y()) * 10);
    CHECK((pts[i] - want).norm() <= 0.5);
  }
}

TEST_CASE("points are decimated past the limit") {
  BevFigure fig;
  for (int i = 0; i < 1000; ++i) fig.cloud.points.emplace_back(0.01 * i, 0, 10);
  fig.max_points = 100;
  const std::string svg = render_bev_svg(fig);
  CHECK(count(svg, "<circle") <= 100);
  CHECK(count(svg, "<circle") >= 90);
}
