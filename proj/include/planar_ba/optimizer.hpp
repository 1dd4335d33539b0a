#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "planar_ba/column_ba.hpp"
#include "planar_ba/scene.hpp"

namespace planar_ba {

struct OptimizerConfig {
  int iterations = 100;
  double step_scale = 2.5;
  double lm_damping = 0.1;
  double convergence_tol = 1e-6;
  bool fix_walls = false;
  bool fix_cameras = false;
  double mask_probability = 0.0;
  std::uint64_t mask_seed = 0;
  RobustFilterConfig robust;

  void validate() const;
};

inline constexpr double kGuardBand = 1.2;

struct AggregatedUpdate {
  std::vector<double> wall_delta;   // per global wall
  std::vector<Vec2> camera_delta;   // per camera index
};

/// Majority sign among the nonzero entries of a group, then the mean of the
/// entries carrying that sign; exact ties average the whole group.
double majority_mean(std::span<const double> values);

AggregatedUpdate aggregate_adjustments(const AdjustmentField& field);

struct ApplyResult {
  Scene scene;
  std::vector<std::string> warnings;
};

/// b_k += s * delta_b_k, T_i += s * delta_T_i, vertices re-derived from the
/// offsets with directions untouched. A wall update that would collapse a wall
/// or push a vertex outside the guard band is skipped with a warning; camera
/// positions are clamped to the band.
ApplyResult apply_adjustments(const Scene& scene, const AggregatedUpdate& update,
                              double step_scale);

struct TraceRow {
  int iteration = 0;
  double mean_abs_reproj_px = 0.0;
  double max_wall_update = 0.0;
  double max_cam_update = 0.0;
};

struct OptimizeResult {
  Scene scene;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
  int iterations_run = 0;
  bool converged = false;
};

/// BA-Only refinement: field -> aggregate -> apply, repeated. The trace
/// carries one row per iteration (state before its update) plus a final row
/// for the returned scene.
OptimizeResult optimize(const Scene& start,
                        std::span<const BoundaryObservation> boundaries,
                        std::span<const ColumnAssignment> assignments,
                        const ImageGeometry& geom, const OptimizerConfig& config,
                        bool noisy_boundaries = false);

/// iter,mean_abs_reproj_px,max_wall_update,max_cam_update
std::string trace_csv(std::span<const TraceRow> trace);

}  // namespace planar_ba
