#include "planar_ba/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "planar_ba/error.hpp"
#include "planar_ba/rng.hpp"

namespace planar_ba {

namespace {

struct Rect {
  double x0, y0, x1, y1;
  double w() const { return x1 - x0; }
  double h() const { return y1 - y0; }
  double area() const { return w() * h(); }
};

constexpr std::array<const char*, 8> kRoomTypes = {
    "bedroom", "kitchen", "bathroom", "dining_room",
    "study",   "balcony", "storage",  "living_room"};

// Counter-clockwise rectangle, or an L-shape with the chosen corner removed.
std::vector<Vec2> rect_loop(const Rect& r) {
  return {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
}

std::vector<Vec2> notched_loop(const Rect& r, int corner, double nw, double nh) {
  const double x0 = r.x0, y0 = r.y0, x1 = r.x1, y1 = r.y1;
  switch (corner) {
    case 0:  // bottom-left removed
      return {{x0 + nw, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0 + nh}, {x0 + nw, y0 + nh}};
    case 1:  // bottom-right
      return {{x0, y0}, {x1 - nw, y0}, {x1 - nw, y0 + nh}, {x1, y0 + nh}, {x1, y1}, {x0, y1}};
    case 2:  // top-right
      return {{x0, y0}, {x1, y0}, {x1, y1 - nh}, {x1 - nw, y1 - nh}, {x1 - nw, y1}, {x0, y1}};
    default:  // top-left
      return {{x0, y0}, {x1, y0}, {x1, y1}, {x0 + nw, y1}, {x0 + nw, y1 - nh}, {x0, y1 - nh}};
  }
}

bool splittable(const Rect& r, double min_size) {
  return std::max(r.w(), r.h()) >= 2.0 * min_size;
}

std::vector<double> room_lengths(const RoomPolygon& room) {
  const std::size_t k = room.vertices.size();
  std::vector<double> len(k);
  for (std::size_t i = 0; i < k; ++i) {
    len[i] = (room.vertices[(i + 1) % k] - room.vertices[i]).dot(room.walls[i].direction);
  }
  return len;
}

}  // namespace

void FloorplanConfig::validate() const {
  if (min_rooms < 1 || max_rooms < min_rooms) {
    fail(ErrorCode::kInvalidArgument, "room count range is empty");
  }
  if (!(extent > 0.0) || !(min_room_size > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "extent and min_room_size must be positive");
  }
  if (!(notch_probability >= 0.0 && notch_probability <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "notch_probability must lie in [0, 1]");
  }
  // The shortest floor side is 0.6 * extent; max_rooms must fit in the worst case.
  const double worst_area = 0.6 * extent * extent;
  if (max_rooms * min_room_size * min_room_size > 0.5 * worst_area ||
      2.0 * min_room_size > 0.6 * extent) {
    fail(ErrorCode::kInvalidArgument, "min_room_size too large for the requested rooms");
  }
}

Scene generate_floorplan(std::uint64_t seed, const FloorplanConfig& config) {
  config.validate();
  Rng rng(derive_seed(seed, {0x666c6f6f72ULL}));
  const double width = config.extent;
  const double height = config.extent * rng.uniform(0.6, 1.0);
  const int target = rng.uniform_int(config.min_rooms, config.max_rooms);

  std::vector<Rect> rects{{0.0, 0.0, width, height}};
  while (static_cast<int>(rects.size()) < target) {
    int pick = -1;
    for (int i = 0; i < static_cast<int>(rects.size()); ++i) {
      if (!splittable(rects[i], config.min_room_size)) continue;
      if (pick < 0 || rects[i].area() > rects[pick].area()) pick = i;
    }
    if (pick < 0) fail(ErrorCode::kInvalidArgument, "floor cannot be split further");
    const Rect r = rects[pick];
    const bool vertical_cut = r.w() >= r.h();
    const double len = vertical_cut ? r.w() : r.h();
    const double lo = std::max(0.35, config.min_room_size / len);
    const double hi = std::min(0.65, 1.0 - config.min_room_size / len);
    const double f = lo < hi ? rng.uniform(lo, hi) : 0.5;
    Rect a = r, b = r;
    if (vertical_cut) {
      a.x1 = b.x0 = r.x0 + f * r.w();
    } else {
      a.y1 = b.y0 = r.y0 + f * r.h();
    }
    rects[pick] = a;
    rects.push_back(b);
  }

  Scene raw;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const Rect& r = rects[i];
    std::vector<Vec2> loop;
    const bool notch = rng.bernoulli(config.notch_probability);
    const int corner = rng.uniform_int(0, 3);
    const double nw = r.w() * rng.uniform(0.25, 0.45);
    const double nh = r.h() * rng.uniform(0.25, 0.45);
    if (notch && std::min(r.w(), r.h()) >= 1.5 * config.min_room_size) {
      loop = notched_loop(r, corner, nw, nh);
    } else {
      loop = rect_loop(r);
    }
    const char* type = i == 0 ? "living_room"
                              : kRoomTypes[rng.uniform_int(0, static_cast<int>(kRoomTypes.size()) - 1)];
    raw.rooms.push_back(make_room(static_cast<int>(i), type, std::move(loop)));
  }
  return normalize_scene(raw);
}

double approximate_inradius(const RoomPolygon& room, int grid) {
  Vec2 lo = room.vertices.front(), hi = lo;
  for (const auto& v : room.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  double best = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const Vec2 p{lo.x() + (hi.x() - lo.x()) * (i + 0.5) / grid,
                   lo.y() + (hi.y() - lo.y()) * (j + 0.5) / grid};
      if (!point_in_polygon(p, room.vertices)) continue;
      best = std::max(best, distance_to_boundary(p, room.vertices));
    }
  }
  return best;
}

std::vector<CameraPose> sample_cameras(const Scene& scene, double imgs_per_room,
                                       std::uint64_t seed,
                                       const CameraSamplingConfig& config) {
  if (scene.rooms.empty()) fail(ErrorCode::kInvalidArgument, "scene has no rooms");
  if (!(imgs_per_room >= 0.0)) fail(ErrorCode::kInvalidArgument, "imgs_per_room must be >= 0");
  if (!(config.height > 0.0)) fail(ErrorCode::kInvalidArgument, "camera height must be positive");
  const int base = static_cast<int>(std::floor(imgs_per_room));
  const double extra = imgs_per_room - base;

  std::vector<CameraPose> cameras;
  for (std::size_t r = 0; r < scene.rooms.size(); ++r) {
    const RoomPolygon& room = scene.rooms[r];
    Rng rng(derive_seed(seed, {0x63616dULL, static_cast<std::uint64_t>(r)}));
    const int count = base + (extra > 0.0 && rng.bernoulli(extra) ? 1 : 0);
    if (count == 0) continue;
    const double margin = config.margin_fraction * approximate_inradius(room);
    if (!(margin > 0.0)) {
      fail(ErrorCode::kValidation, "room " + std::to_string(room.id) + " is degenerate");
    }
    Vec2 lo = room.vertices.front(), hi = lo;
    for (const auto& v : room.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    for (int n = 0; n < count; ++n) {
      bool placed = false;
      for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
        const Vec2 p{rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y())};
        if (!point_in_polygon(p, room.vertices) ||
            distance_to_boundary(p, room.vertices) < margin) {
          continue;
        }
        CameraPose cam;
        cam.id = static_cast<int>(cameras.size());
        cam.position = p;
        cam.rotation = rng.uniform(0.0, 2.0 * kPi);
        cam.height = config.height;
        cameras.push_back(cam);
        placed = true;
      }
      if (!placed) {
        fail(ErrorCode::kValidation,
             "could not place a camera in room " + std::to_string(room.id));
      }
    }
  }
  return cameras;
}

void NoiseConfig::validate() const {
  if (!(scene_sigma >= 0.0) || !(boundary_max_scale >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "noise scales must be non-negative");
  }
  if (!(boundary_chance >= 0.0 && boundary_chance <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "boundary_chance must lie in [0, 1]");
  }
}

namespace {
constexpr int kMaxPerturbAttempts = 64;
constexpr double kMinPerturbedLength = 1e-3;
}  // namespace

Scene perturb_scene(const Scene& scene, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) fail(ErrorCode::kInvalidArgument, "sigma must be non-negative");
  if (sigma == 0.0) return scene;
  const double s = sigma * kNormalizedExtent;
  Scene out = scene;
  int gid = 0;
  for (auto& room : out.rooms) {
    const std::size_t k = room.walls.size();
    std::vector<Vec2> directions(k);
    std::vector<double> base(k);
    std::vector<Rng> streams;
    for (std::size_t e = 0; e < k; ++e, ++gid) {
      directions[e] = room.walls[e].direction;
      base[e] = room.walls[e].offset;
      streams.emplace_back(derive_seed(seed, {0x77616c6cULL, static_cast<std::uint64_t>(gid)}));
    }
    // A draw that reverses a wall or breaks simplicity cannot be stored as a
    // vertex loop with the same directions; such draws are redrawn.
    std::vector<double> offsets(k);
    std::vector<Vec2> verts;
    for (int attempt = 0; attempt < kMaxPerturbAttempts; ++attempt) {
      for (std::size_t e = 0; e < k; ++e) offsets[e] = base[e] + streams[e].normal(0.0, s);
      verts = vertices_from_offsets(directions, offsets);
      bool ok = is_simple_polygon(verts) && signed_area(verts) > 0.0;
      for (std::size_t e = 0; e < k && ok; ++e) {
        ok = (verts[(e + 1) % k] - verts[e]).dot(directions[e]) > kMinPerturbedLength;
      }
      if (ok) break;
    }
    for (std::size_t e = 0; e < k; ++e) room.walls[e].offset = offsets[e];
    room.vertices = std::move(verts);
  }
  for (auto& cam : out.cameras) {
    Rng rng(derive_seed(seed, {0x706f7365ULL, static_cast<std::uint64_t>(cam.id)}));
    const double dx = rng.normal(0.0, s);
    const double dy = rng.normal(0.0, s);
    cam.position += Vec2{dx, dy};
  }
  return out;
}

std::pair<BoundaryObservation, ColumnAssignment> perturb_boundaries(
    const Scene& scene, const CameraPose& camera, const ImageGeometry& geom,
    const NoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  auto clean = render_boundary(scene, camera, geom);
  if (noise.boundary_chance == 0.0 || noise.boundary_max_scale == 0.0) return clean;

  std::set<int> visible;
  for (int gid : clean.second.walls) {
    if (gid != kUnassigned) visible.insert(gid);
  }

  Scene noisy = scene;
  Rng rng(derive_seed(seed, {0x626e6479ULL, static_cast<std::uint64_t>(camera.id)}));
  const double max_shift = noise.boundary_max_scale * kNormalizedExtent;
  for (int gid : visible) {
    const bool chosen = rng.bernoulli(noise.boundary_chance);
    double delta = rng.uniform(-max_shift, max_shift);
    if (!chosen || delta == 0.0) continue;

    const WallRef ref = noisy.wall_ref(gid);
    RoomPolygon& room = noisy.rooms[ref.room];
    const Wall& wall = room.walls[ref.edge];
    // Keep the wall on the far side of the camera with at least a quarter of
    // its distance left.
    const double gap = wall.normal.dot(camera.position) - wall.offset;
    delta = std::min(delta, 0.75 * gap);

    const std::size_t k = room.walls.size();
    const std::vector<double> base_len = room_lengths(scene.rooms[ref.room]);
    std::vector<Vec2> directions(k);
    std::vector<double> offsets(k);
    for (std::size_t e = 0; e < k; ++e) {
      directions[e] = room.walls[e].direction;
      offsets[e] = room.walls[e].offset;
    }
    // Halve the translation until the adjacent walls keep a tenth of their
    // original length and the camera stays inside.
    bool applied = false;
    for (int tries = 0; tries < 12 && !applied; ++tries, delta *= 0.5) {
      std::vector<double> trial = offsets;
      trial[ref.edge] += delta;
      RoomPolygon candidate = room;
      candidate.vertices = vertices_from_offsets(directions, trial);
      for (std::size_t e = 0; e < k; ++e) candidate.walls[e].offset = trial[e];
      const std::vector<double> len = room_lengths(candidate);
      bool ok = true;
      for (std::size_t e = 0; e < k && ok; ++e) ok = len[e] > 0.1 * base_len[e];
      ok = ok && is_simple_polygon(candidate.vertices) &&
           point_in_polygon(camera.position, candidate.vertices) &&
           distance_to_boundary(camera.position, candidate.vertices) > 1e-3;
      if (ok) {
        room = std::move(candidate);
        applied = true;
      }
    }
  }

  auto rendered = render_boundary(noisy, camera, geom);
  return {rendered.first, clean.second};
}

}  // namespace planar_ba
