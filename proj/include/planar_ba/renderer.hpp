#pragma once

#include <optional>
#include <utility>

#include "planar_ba/scene.hpp"

namespace planar_ba {

/// Equirectangular panorama size. Height is always width / 2.
class ImageGeometry {
 public:
  explicit ImageGeometry(int width = 512);

  int width() const { return width_; }
  int height() const { return width_ / 2; }

 private:
  int width_;
};

double column_azimuth(int column, int width);

/// Global ray direction for a column: (sin(R + theta), cos(R + theta)).
Vec2 column_ray(const CameraPose& camera, int column, const ImageGeometry& geom);

struct RayHit {
  Vec2 point;
  double range = 0.0;
};

/// Infinite-line intersection; none when the ray is parallel or the hit lies
/// behind the origin.
std::optional<RayHit> intersect_ray_wall(const Vec2& origin, const Vec2& dir,
                                         const Wall& wall);

Vec2 global_to_cam2d(const Vec2& point, const CameraPose& camera);

/// row = H * (0.5 + atan(z / d) / pi), d = |point_cam|.
double cam2d_to_pixel_row(const Vec2& point_cam, double height_z, int rows);

/// Projected row of `wall` seen through column `column`, or none when the ray
/// does not hit the wall line in front of the camera.
std::optional<double> project_column(const Wall& wall, const CameraPose& camera,
                                     int column, const ImageGeometry& geom);

/// Nearest segment hit inside the camera's room for every column.
std::pair<BoundaryObservation, ColumnAssignment> render_boundary(
    const Scene& scene, const CameraPose& camera, const ImageGeometry& geom);

/// Re-projects each column onto its assigned wall line without occlusion tests.
BoundaryObservation project_assigned_boundary(const Scene& scene,
                                              const CameraPose& camera,
                                              const ColumnAssignment& assignment,
                                              const ImageGeometry& geom);

}  // namespace planar_ba
