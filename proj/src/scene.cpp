#include "planar_ba/scene.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "planar_ba/error.hpp"

namespace planar_ba {

namespace {

constexpr double kDegenerateSegment = 1e-9;
constexpr double kParallelTolerance = 1e-9;
constexpr double kRangeTolerance = 1e-9;

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({(b - a).norm(), (c - a).norm(), 1.0});
  if (std::abs(v) <= 1e-12 * scale * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) - 1e-12 <= p.x() &&
         p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
         std::min(a.y(), b.y()) - 1e-12 <= p.y() &&
         p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                        const Vec2& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

Wall wall_from_segment(const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len = d.norm();
  if (!(len > kDegenerateSegment)) {
    fail(ErrorCode::kInvalidArgument, "degenerate wall segment");
  }
  Wall w;
  w.direction = d / len;
  w.normal = rotate90(w.direction);
  w.offset = w.normal.dot(a);
  return w;
}

RoomPolygon make_room(int id, std::string room_type, std::vector<Vec2> vertices) {
  if (vertices.size() < 3) {
    fail(ErrorCode::kValidation, "room " + std::to_string(id) +
                                     " has fewer than 3 vertices");
  }
  if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
  RoomPolygon room;
  room.id = id;
  room.room_type = std::move(room_type);
  const std::size_t k = vertices.size();
  room.walls.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    Wall w = wall_from_segment(vertices[i], vertices[(i + 1) % k]);
    w.room_id = id;
    w.vertex_id = static_cast<int>(i);
    room.walls.push_back(w);
  }
  room.vertices = std::move(vertices);
  return room;
}

std::size_t Scene::wall_count() const {
  std::size_t n = 0;
  for (const auto& r : rooms) n += r.walls.size();
  return n;
}

std::vector<WallRef> Scene::wall_index() const {
  std::vector<WallRef> index;
  index.reserve(wall_count());
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    for (std::size_t e = 0; e < rooms[r].walls.size(); ++e) index.push_back({r, e});
  }
  return index;
}

WallRef Scene::wall_ref(int global_id) const {
  if (global_id < 0) fail(ErrorCode::kInvalidArgument, "negative wall id");
  auto remaining = static_cast<std::size_t>(global_id);
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    if (remaining < rooms[r].walls.size()) return {r, remaining};
    remaining -= rooms[r].walls.size();
  }
  fail(ErrorCode::kInvalidArgument,
       "wall id " + std::to_string(global_id) + " out of range");
}

const Wall& Scene::wall(int global_id) const {
  const WallRef ref = wall_ref(global_id);
  return rooms[ref.room].walls[ref.edge];
}

int Scene::global_wall_id(std::size_t room, std::size_t edge) const {
  std::size_t id = 0;
  for (std::size_t r = 0; r < room; ++r) id += rooms[r].walls.size();
  return static_cast<int>(id + edge);
}

std::vector<Vec2> vertices_from_offsets(std::span<const Vec2> directions,
                                        std::span<const double> offsets) {
  const std::size_t k = directions.size();
  if (k < 3 || offsets.size() != k) {
    fail(ErrorCode::kInvalidArgument,
         "need at least 3 walls with matching offsets");
  }
  std::vector<Vec2> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t prev = (i + k - 1) % k;
    const Vec2 n0 = rotate90(directions[prev]);
    const Vec2 n1 = rotate90(directions[i]);
    const double det = cross(n0, n1);
    if (std::abs(det) < kParallelTolerance) {
      fail(ErrorCode::kNumeric, "consecutive walls " + std::to_string(prev) +
                                    " and " + std::to_string(i) +
                                    " are parallel");
    }
    // Cramer's rule on [n0; n1] p = [b0; b1].
    const double b0 = offsets[prev];
    const double b1 = offsets[i];
    out[i] = Vec2{(b0 * n1.y() - b1 * n0.y()) / det,
                  (n0.x() * b1 - n1.x() * b0) / det};
  }
  return out;
}

std::vector<double> offsets_from_vertices(const RoomPolygon& room) {
  std::vector<double> offsets(room.walls.size());
  for (std::size_t k = 0; k < room.walls.size(); ++k) {
    offsets[k] = room.walls[k].normal.dot(room.vertices[k]);
  }
  return offsets;
}

Scene transform_scene(const Scene& scene, const NormTransform& t) {
  Scene out = scene;
  for (auto& room : out.rooms) {
    for (auto& v : room.vertices) v = t.apply(v);
    for (std::size_t k = 0; k < room.walls.size(); ++k) {
      room.walls[k].offset = room.walls[k].normal.dot(room.vertices[k]);
    }
  }
  for (auto& door : out.doors) {
    for (auto& v : door.vertices) v = t.apply(v);
  }
  for (auto& cam : out.cameras) {
    cam.position = t.apply(cam.position);
    cam.height *= t.scale;
  }
  out.norm_transform = scene.norm_transform ? scene.norm_transform->then(t) : t;
  return out;
}

Scene normalize_scene(const Scene& raw) {
  if (raw.rooms.empty()) fail(ErrorCode::kInvalidArgument, "scene has no rooms");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  auto extend = [&](const Vec2& v) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  };
  for (const auto& r : raw.rooms) std::for_each(r.vertices.begin(), r.vertices.end(), extend);
  for (const auto& d : raw.doors) std::for_each(d.vertices.begin(), d.vertices.end(), extend);
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) fail(ErrorCode::kInvalidArgument, "zero-extent floor bounding box");
  NormTransform t;
  t.scale = 2.0 / (extent * 1.05);
  t.translate = -t.scale * 0.5 * (lo + hi);
  return transform_scene(raw, t);
}

double signed_area(std::span<const Vec2> loop) {
  double a = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    a += cross(loop[i], loop[(i + 1) % loop.size()]);
  }
  return 0.5 * a;
}

bool is_simple_polygon(std::span<const Vec2> loop) {
  const std::size_t k = loop.size();
  if (k < 3) return false;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == k - 1);
      if (adjacent) continue;
      if (segments_intersect(loop[i], loop[(i + 1) % k], loop[j], loop[(j + 1) % k])) {
        return false;
      }
    }
  }
  return true;
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> loop) {
  bool inside = false;
  for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

double distance_to_boundary(const Vec2& p, std::span<const Vec2> loop) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < loop.size(); ++i) {
    best = std::min(best, segment_distance(p, loop[i], loop[(i + 1) % loop.size()]));
  }
  return best;
}

std::optional<std::size_t> containing_room(const Scene& scene, const Vec2& p) {
  for (std::size_t r = 0; r < scene.rooms.size(); ++r) {
    if (point_in_polygon(p, scene.rooms[r].vertices)) return r;
  }
  return std::nullopt;
}

bool ValidationReport::has(const std::string& kind) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& i) { return i.kind == kind; });
}

ValidationReport validate_scene(const Scene& scene) {
  ValidationReport report;
  auto add = [&](const char* kind, const std::string& msg) {
    report.issues.push_back({kind, msg});
  };

  if (scene.rooms.empty()) add("empty", "scene has no rooms");
  for (const auto& room : scene.rooms) {
    const std::string name = "room " + std::to_string(room.id);
    const std::size_t k = room.vertices.size();
    if (k < 3) {
      add("loop_size", name + " has " + std::to_string(k) + " vertices");
      continue;
    }
    if (room.walls.size() != k) {
      add("open_loop", name + " wall count differs from vertex count");
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const Wall& w = room.walls[i];
      if (std::abs(w.direction.norm() - 1.0) > 1e-12) {
        add("direction", name + " wall " + std::to_string(i) + " direction not unit");
      }
      const Vec2& a = room.vertices[i];
      const Vec2& b = room.vertices[(i + 1) % k];
      if ((b - a).norm() <= kDegenerateSegment) {
        add("degenerate_wall", name + " wall " + std::to_string(i) + " has zero length");
      }
      const double tol = 1e-9 * std::max(1.0, std::abs(w.offset));
      if (std::abs(w.normal.dot(a) - w.offset) > tol ||
          std::abs(w.normal.dot(b) - w.offset) > tol) {
        add("open_loop", name + " wall " + std::to_string(i) + " does not join its vertices");
      }
      const Wall& next = room.walls[(i + 1) % k];
      if (std::abs(cross(w.direction, next.direction)) < kParallelTolerance) {
        add("parallel_walls", name + " walls " + std::to_string(i) + " and " +
                                  std::to_string((i + 1) % k) + " are parallel");
      }
    }
    if (!is_simple_polygon(room.vertices)) add("self_intersection", name + " is not simple");
  }

  const std::size_t walls = scene.wall_count();
  if (walls > kMaxWalls) {
    add("capacity", std::to_string(walls) + " walls exceed capacity " +
                        std::to_string(kMaxWalls));
  }
  if (scene.cameras.size() > kMaxCameras) {
    add("capacity", std::to_string(scene.cameras.size()) +
                        " cameras exceed capacity " + std::to_string(kMaxCameras));
  }

  for (const auto& cam : scene.cameras) {
    const std::string name = "camera " + std::to_string(cam.id);
    if (!(cam.height > 0.0)) add("camera_height", name + " height must be positive");
    if (!containing_room(scene, cam.position)) add("camera_outside", name + " is outside all rooms");
  }

  if (scene.norm_transform) {
    auto in_range = [](const Vec2& v) {
      return std::abs(v.x()) <= 1.0 + kRangeTolerance &&
             std::abs(v.y()) <= 1.0 + kRangeTolerance;
    };
    for (const auto& room : scene.rooms) {
      for (const auto& v : room.vertices) {
        if (!in_range(v)) {
          std::ostringstream os;
          os << "room " << room.id << " vertex (" << v.x() << ", " << v.y()
             << ") outside [-1, 1]";
          add("out_of_range", os.str());
        }
      }
    }
    for (const auto& cam : scene.cameras) {
      if (!in_range(cam.position)) {
        add("out_of_range", "camera " + std::to_string(cam.id) + " outside [-1, 1]");
      }
    }
  }
  return report;
}

}  // namespace planar_ba
