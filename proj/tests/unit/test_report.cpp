#include <doctest.h>

#include <algorithm>
#include <string>

#include "planar_ba/report.hpp"
#include "test_support.hpp"

using namespace planar_ba;
using planar_ba::testing::generated_floor;

namespace {

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("layout triptych") {
  const Scene gt = generated_floor(4);
  const Scene start = perturb_scene(gt, 0.033, 4);
  const std::string svg = layout_triptych_svg(start, gt, gt);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count_of(svg, "<polygon") == 3 * gt.rooms.size());
  CHECK(count_of(svg, "<circle") == 3 * gt.cameras.size());
  CHECK(svg.find(">before<") != std::string::npos);
  CHECK(svg.find(">after<") != std::string::npos);
  CHECK(svg.find(">ground truth<") != std::string::npos);
  CHECK(svg == layout_triptych_svg(start, gt, gt));
}

TEST_CASE("camera overlay") {
  const Scene gt = generated_floor(4);
  const ImageGeometry g(128);
  auto [b, a] = render_boundary(gt, gt.cameras[0], g);
  std::string svg = camera_overlay_svg(gt, 0, b, a, g);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(count_of(svg, "<polyline") == 2);
  CHECK(svg.find("#1a7f37") != std::string::npos);
  CHECK(svg == camera_overlay_svg(gt, 0, b, a, g));

  // An invalid column splits both lines.
  b.rows[40].reset();
  a.walls[40] = kUnassigned;
  svg = camera_overlay_svg(gt, 0, b, a, g);
  CHECK(count_of(svg, "<polyline") == 4);
}
