#include "planar_ba/renderer.hpp"

#include <cmath>
#include <limits>

#include "planar_ba/error.hpp"

namespace planar_ba {

namespace {
constexpr double kParallelRay = 1e-12;
constexpr double kSegmentSlack = 1e-9;
constexpr double kOnWallTolerance = 1e-6;
}  // namespace

ImageGeometry::ImageGeometry(int width) : width_(width) {
  if (width < 4 || width % 2 != 0) {
    fail(ErrorCode::kInvalidArgument,
         "image width must be even and at least 4, got " + std::to_string(width));
  }
}

double column_azimuth(int column, int width) {
  if (column < 0 || column >= width) {
    fail(ErrorCode::kInvalidArgument, "column " + std::to_string(column) +
                                          " out of range for width " +
                                          std::to_string(width));
  }
  return 2.0 * kPi * (column + 0.5) / width - kPi;
}

Vec2 column_ray(const CameraPose& camera, int column, const ImageGeometry& geom) {
  const double a = camera.rotation + column_azimuth(column, geom.width());
  return {std::sin(a), std::cos(a)};
}

std::optional<RayHit> intersect_ray_wall(const Vec2& origin, const Vec2& dir,
                                         const Wall& wall) {
  const double denom = wall.normal.dot(dir);
  if (std::abs(denom) < kParallelRay) return std::nullopt;
  const double t = (wall.offset - wall.normal.dot(origin)) / denom;
  if (!(t > 0.0)) return std::nullopt;
  return RayHit{origin + t * dir, t};
}

Vec2 global_to_cam2d(const Vec2& point, const CameraPose& camera) {
  return rotate(point - camera.position, -camera.rotation);
}

double cam2d_to_pixel_row(const Vec2& point_cam, double height_z, int rows) {
  const double d = point_cam.norm();
  if (!(d > 1e-9)) fail(ErrorCode::kNumeric, "boundary point coincides with camera");
  if (!(height_z > 0.0)) fail(ErrorCode::kInvalidArgument, "camera height must be positive");
  return rows * (0.5 + std::atan(height_z / d) / kPi);
}

std::optional<double> project_column(const Wall& wall, const CameraPose& camera,
                                     int column, const ImageGeometry& geom) {
  const Vec2 dir = column_ray(camera, column, geom);
  const auto hit = intersect_ray_wall(camera.position, dir, wall);
  if (!hit) return std::nullopt;
  const Vec2 cam = global_to_cam2d(hit->point, camera);
  if (!(cam.norm() > 1e-9)) return std::nullopt;
  return cam2d_to_pixel_row(cam, camera.height, geom.height());
}

std::pair<BoundaryObservation, ColumnAssignment> render_boundary(
    const Scene& scene, const CameraPose& camera, const ImageGeometry& geom) {
  const auto room_index = containing_room(scene, camera.position);
  if (!room_index) {
    fail(ErrorCode::kValidation,
         "camera " + std::to_string(camera.id) + " is outside all rooms");
  }
  const RoomPolygon& room = scene.rooms[*room_index];
  if (distance_to_boundary(camera.position, room.vertices) < kOnWallTolerance) {
    fail(ErrorCode::kValidation,
         "camera " + std::to_string(camera.id) + " lies on a wall");
  }
  const int first_wall = scene.global_wall_id(*room_index, 0);
  const std::size_t k = room.walls.size();

  BoundaryObservation boundary{camera.id, {}};
  ColumnAssignment assignment{camera.id, {}};
  boundary.rows.resize(geom.width());
  assignment.walls.assign(geom.width(), kUnassigned);

  for (int c = 0; c < geom.width(); ++c) {
    const Vec2 dir = column_ray(camera, c, geom);
    double best = std::numeric_limits<double>::infinity();
    int best_edge = -1;
    for (std::size_t e = 0; e < k; ++e) {
      const Wall& w = room.walls[e];
      const auto hit = intersect_ray_wall(camera.position, dir, w);
      if (!hit || hit->range >= best) continue;
      const Vec2& a = room.vertices[e];
      const double len = (room.vertices[(e + 1) % k] - a).norm();
      const double s = (hit->point - a).dot(w.direction);
      if (s < -kSegmentSlack || s > len + kSegmentSlack) continue;
      best = hit->range;
      best_edge = static_cast<int>(e);
    }
    if (best_edge < 0) continue;
    const int gid = first_wall + best_edge;
    boundary.rows[c] = project_column(room.walls[best_edge], camera, c, geom);
    if (boundary.rows[c]) assignment.walls[c] = gid;
  }
  return {boundary, assignment};
}

BoundaryObservation project_assigned_boundary(const Scene& scene,
                                              const CameraPose& camera,
                                              const ColumnAssignment& assignment,
                                              const ImageGeometry& geom) {
  if (static_cast<int>(assignment.walls.size()) != geom.width()) {
    fail(ErrorCode::kInvalidArgument, "assignment width does not match image geometry");
  }
  BoundaryObservation out{camera.id, {}};
  out.rows.resize(geom.width());
  for (int c = 0; c < geom.width(); ++c) {
    const int gid = assignment.walls[c];
    if (gid == kUnassigned) continue;
    out.rows[c] = project_column(scene.wall(gid), camera, c, geom);
  }
  return out;
}

}  // namespace planar_ba
