#pragma once

#include <array>
#include <string>
#include <vector>

#include "planar_ba/column_ba.hpp"
#include "planar_ba/scene.hpp"

namespace planar_ba {

/// Channels of the per-column 6-vector, each a 2-vector.
enum class StatsChannel { kWallShift = 0, kCameraShift = 1, kBoundaryHit = 2 };
/// Projection axes: the wall normal and the wall direction.
enum class StatsAxis { kNormal = 0, kDirection = 1 };

inline constexpr double kStatsScale = 100.0;

/// Mean and population std of every channel projected on each wall axis,
/// scaled by kStatsScale.
struct WallCameraStats {
  int camera_id = 0;
  int wall_id = 0;
  int count = 0;
  std::array<std::array<double, 2>, 3> mean{};
  std::array<std::array<double, 2>, 3> std{};
};

/// Sparse over (camera, wall): pairs with no valid column are absent. Sorted
/// by (camera index, wall id).
std::vector<WallCameraStats> projected_stats(const AdjustmentField& field,
                                             const Scene& scene);

/// camera_id,wall_id,channel,axis,mean,std,count
std::string stats_csv(const std::vector<WallCameraStats>& stats);

const char* channel_name(StatsChannel c);
const char* axis_name(StatsAxis a);

}  // namespace planar_ba
