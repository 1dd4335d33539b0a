#include "planar_ba/report.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "planar_ba/error.hpp"
#include "planar_ba/format.hpp"
#include "planar_ba/optimizer.hpp"

namespace planar_ba {
namespace {

constexpr double kPanel = 320.0;
constexpr double kPad = 16.0;
constexpr double kView = kGuardBand;

std::string num(double v) { return format_double(v, 6); }

struct PanelMap {
  double x0;
  double sx(double x) const { return x0 + (x + kView) / (2.0 * kView) * kPanel; }
  double sy(double y) const { return kPad + (kView - y) / (2.0 * kView) * kPanel; }
};

void draw_scene(std::ostringstream& os, const Scene& scene, const PanelMap& m,
                const std::string& title) {
  os << "  <g>\n";
  os << "    <text x=\"" << num(m.x0 + kPanel / 2) << "\" y=\"" << num(kPad + kPanel + 18)
     << "\" text-anchor=\"middle\">" << title << "</text>\n";
  os << "    <rect x=\"" << num(m.x0) << "\" y=\"" << num(kPad) << "\" width=\"" << num(kPanel)
     << "\" height=\"" << num(kPanel) << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
  for (const auto& room : scene.rooms) {
    os << "    <polygon points=\"";
    for (std::size_t i = 0; i < room.vertices.size(); ++i) {
      if (i) os << ' ';
      os << num(m.sx(room.vertices[i].x())) << ',' << num(m.sy(room.vertices[i].y()));
    }
    os << "\" fill=\"#eef\" stroke=\"#226\" stroke-width=\"1.5\"/>\n";
  }
  for (const auto& cam : scene.cameras) {
    const double cx = m.sx(cam.position.x());
    const double cy = m.sy(cam.position.y());
    // Heading at column W/2, where the azimuth is zero.
    const Vec2 dir{std::sin(cam.rotation), std::cos(cam.rotation)};
    os << "    <circle cx=\"" << num(cx) << "\" cy=\"" << num(cy)
       << "\" r=\"3.5\" fill=\"#c22\"/>\n";
    os << "    <line x1=\"" << num(cx) << "\" y1=\"" << num(cy) << "\" x2=\""
       << num(cx + 10.0 * dir.x()) << "\" y2=\"" << num(cy - 10.0 * dir.y())
       << "\" stroke=\"#c22\"/>\n";
  }
  os << "  </g>\n";
}

void polyline_runs(std::ostringstream& os, const std::vector<std::optional<double>>& rows,
                   const std::string& color, const std::string& dash) {
  std::vector<std::string> run;
  auto flush = [&] {
    if (run.size() >= 2) {
      os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (!dash.empty()) os << " stroke-dasharray=\"" << dash << "\"";
      os << " points=\"";
      for (std::size_t i = 0; i < run.size(); ++i) os << (i ? " " : "") << run[i];
      os << "\"/>\n";
    }
    run.clear();
  };
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (!rows[c]) {
      flush();
      continue;
    }
    run.push_back(num(static_cast<double>(c) + 0.5) + "," + num(*rows[c]));
  }
  flush();
}

}  // namespace

std::string layout_triptych_svg(const Scene& before, const Scene& after, const Scene& gt) {
  const double width = 3.0 * kPanel + 4.0 * kPad;
  const double height = kPanel + 2.0 * kPad + 24.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
     << num(height) << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  draw_scene(os, before, {kPad}, "before");
  draw_scene(os, after, {2.0 * kPad + kPanel}, "after");
  draw_scene(os, gt, {3.0 * kPad + 2.0 * kPanel}, "ground truth");
  os << "</svg>\n";
  return os.str();
}

std::string camera_overlay_svg(const Scene& scene, std::size_t camera_index,
                               const BoundaryObservation& observed,
                               const ColumnAssignment& assignment,
                               const ImageGeometry& geom) {
  if (camera_index >= scene.cameras.size()) {
    fail(ErrorCode::kInvalidArgument, "camera index out of range");
  }
  const CameraPose& cam = scene.cameras[camera_index];
  const BoundaryObservation projected = project_assigned_boundary(scene, cam, assignment, geom);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << geom.width() << "\" height=\""
     << geom.height() + 20 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"" << geom.width() << "\" height=\"" << geom.height()
     << "\" fill=\"#f7f7f7\" stroke=\"#999\"/>\n";
  polyline_runs(os, observed.rows, "#1a7f37", "");
  polyline_runs(os, projected.rows, "#c22", "4 2");
  os << "  <text x=\"4\" y=\"" << geom.height() + 14 << "\">camera " << cam.id
     << ": observed (solid), projected (dashed)</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace planar_ba
