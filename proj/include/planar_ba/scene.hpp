#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planar_ba/geometry.hpp"

namespace planar_ba {

inline constexpr std::size_t kMaxWalls = 300;
inline constexpr std::size_t kMaxCameras = 30;
inline constexpr int kUnassigned = -1;
/// Width of the normalized frame [-1, 1]; percentages of "extent" refer to it.
inline constexpr double kNormalizedExtent = 2.0;

/// Wall line in Hesse normal form: normal . p = offset, with
/// normal = rotate90(direction). With counter-clockwise winding the normal
/// points into the room.
struct Wall {
  Vec2 direction{1.0, 0.0};
  Vec2 normal{0.0, 1.0};
  double offset = 0.0;
  int room_id = 0;
  int vertex_id = 0;
};

Wall wall_from_segment(const Vec2& a, const Vec2& b);

struct RoomPolygon {
  int id = 0;
  std::string room_type;
  std::vector<Vec2> vertices;
  std::vector<Wall> walls;  // walls[k] runs vertices[k] -> vertices[k+1 mod K]
};

/// Builds a room from an ordered vertex loop. Clockwise input is reversed so
/// that the stored winding is always counter-clockwise.
RoomPolygon make_room(int id, std::string room_type, std::vector<Vec2> vertices);

/// Door polygons are carried through I/O but take no part in rendering or BA.
struct DoorPolygon {
  int id = 0;
  std::vector<Vec2> vertices;
};

struct CameraPose {
  int id = 0;
  Vec2 position = Vec2::Zero();
  double rotation = 0.0;  // radians, fixed
  double height = 0.35;   // above floor, normalized units
};

/// normalized = scale * raw + translate.
struct NormTransform {
  double scale = 1.0;
  Vec2 translate = Vec2::Zero();

  Vec2 apply(const Vec2& raw) const { return scale * raw + translate; }
  Vec2 invert(const Vec2& normalized) const {
    return (normalized - translate) / scale;
  }
  NormTransform then(const NormTransform& next) const {
    return {next.scale * scale, next.scale * translate + next.translate};
  }
};

struct WallRef {
  std::size_t room = 0;
  std::size_t edge = 0;
};

struct Scene {
  std::vector<RoomPolygon> rooms;
  std::vector<DoorPolygon> doors;
  std::vector<CameraPose> cameras;
  std::optional<NormTransform> norm_transform;

  /// Global wall ids enumerate walls room-major, edge-minor.
  std::size_t wall_count() const;
  std::vector<WallRef> wall_index() const;
  WallRef wall_ref(int global_id) const;
  const Wall& wall(int global_id) const;
  int global_wall_id(std::size_t room, std::size_t edge) const;
};

/// Per-camera column-to-wall map; kUnassigned marks columns with no wall.
struct ColumnAssignment {
  int camera_id = 0;
  std::vector<int> walls;
};

/// Per-camera floor-boundary pixel rows; std::nullopt marks invalid columns.
struct BoundaryObservation {
  int camera_id = 0;
  std::vector<std::optional<double>> rows;
};

/// Vertex k is the intersection of wall lines k-1 and k.
std::vector<Vec2> vertices_from_offsets(std::span<const Vec2> directions,
                                        std::span<const double> offsets);
std::vector<double> offsets_from_vertices(const RoomPolygon& room);

/// Maps the floor bounding box (plus 5% margin) isotropically into [-1, 1]^2.
/// Camera heights are scaled by the same factor and the composed transform is
/// recorded on the returned scene.
Scene normalize_scene(const Scene& raw);

/// Applies `t` to every position in the scene and composes it into
/// norm_transform.
Scene transform_scene(const Scene& scene, const NormTransform& t);

double signed_area(std::span<const Vec2> loop);
bool is_simple_polygon(std::span<const Vec2> loop);
bool point_in_polygon(const Vec2& p, std::span<const Vec2> loop);
double distance_to_boundary(const Vec2& p, std::span<const Vec2> loop);

/// Index of the room that strictly contains `p`, if any.
std::optional<std::size_t> containing_room(const Scene& scene, const Vec2& p);

struct ValidationIssue {
  std::string kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(const std::string& kind) const;
};

/// Report-only check of every scene invariant. Coordinate range is checked only
/// for scenes that carry a norm_transform.
ValidationReport validate_scene(const Scene& scene);

}  // namespace planar_ba
