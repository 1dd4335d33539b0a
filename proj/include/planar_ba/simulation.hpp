#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "planar_ba/renderer.hpp"
#include "planar_ba/scene.hpp"

namespace planar_ba {

struct FloorplanConfig {
  int min_rooms = 4;
  int max_rooms = 8;
  double extent = 10.0;          // raw units (metres) of the floor's long side
  double min_room_size = 1.5;    // raw units
  double notch_probability = 0.3;

  void validate() const;
};

/// Rectilinear floor from recursive axis-aligned splits with optional corner
/// notches, returned normalized and without cameras.
Scene generate_floorplan(std::uint64_t seed, const FloorplanConfig& config = {});

struct CameraSamplingConfig {
  double height = 0.35;           // normalized units
  double margin_fraction = 0.25;  // of the room's inradius
};

/// floor(imgs_per_room) cameras per room plus one more with probability
/// frac(imgs_per_room). Ids are sequential in room order.
std::vector<CameraPose> sample_cameras(const Scene& scene, double imgs_per_room,
                                       std::uint64_t seed,
                                       const CameraSamplingConfig& config = {});

/// Approximate inradius by grid search over the polygon interior.
double approximate_inradius(const RoomPolygon& room, int grid = 48);

struct NoiseConfig {
  double scene_sigma = 0.033;        // fraction of kNormalizedExtent
  double boundary_chance = 0.0;      // per visible wall, per render
  double boundary_max_scale = 0.0;   // uniform half-range, fraction of extent
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian noise on every wall offset and camera coordinate. Directions,
/// rotations and heights are untouched. A room whose draw would reverse a
/// wall or self-intersect is redrawn from the same streams.
Scene perturb_scene(const Scene& scene, double sigma, std::uint64_t seed);

/// Renders `camera` after randomly translating visible walls of a copy of the
/// scene along their normals. Translations are clamped so a wall stays in
/// front of the camera and keeps its neighbours from collapsing. The returned
/// assignment is the clean one.
std::pair<BoundaryObservation, ColumnAssignment> perturb_boundaries(
    const Scene& scene, const CameraPose& camera, const ImageGeometry& geom,
    const NoiseConfig& noise, std::uint64_t seed);

}  // namespace planar_ba
