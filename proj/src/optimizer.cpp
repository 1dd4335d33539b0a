#include "planar_ba/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "planar_ba/error.hpp"
#include "planar_ba/format.hpp"

namespace planar_ba {

namespace {

constexpr double kMinWallLength = 1e-6;

bool in_band(const Vec2& v) {
  return std::abs(v.x()) <= kGuardBand && std::abs(v.y()) <= kGuardBand;
}

std::vector<double> wall_lengths(const std::vector<Wall>& walls,
                                 const std::vector<Vec2>& vertices) {
  const std::size_t k = vertices.size();
  std::vector<double> len(k);
  for (std::size_t i = 0; i < k; ++i) {
    len[i] = (vertices[(i + 1) % k] - vertices[i]).dot(walls[i].direction);
  }
  return len;
}

double mean_abs_residual(const AdjustmentField& field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : field.entries) {
    if (!e.valid) continue;
    sum += std::abs(e.residual);
    ++n;
  }
  return n ? sum / n : 0.0;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (iterations < 1) fail(ErrorCode::kInvalidArgument, "iterations must be >= 1");
  if (!(step_scale > 0.0)) fail(ErrorCode::kInvalidArgument, "step_scale must be positive");
  if (!(lm_damping > 0.0)) fail(ErrorCode::kInvalidArgument, "lm_damping must be positive");
  if (!(convergence_tol >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "convergence_tol must be non-negative");
  }
  if (!(mask_probability >= 0.0 && mask_probability <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "mask_probability must lie in [0, 1]");
  }
}

double majority_mean(std::span<const double> values) {
  double pos_sum = 0.0, neg_sum = 0.0, all_sum = 0.0;
  std::size_t pos = 0, neg = 0;
  for (double v : values) {
    all_sum += v;
    if (v > 0.0) {
      pos_sum += v;
      ++pos;
    } else if (v < 0.0) {
      neg_sum += v;
      ++neg;
    }
  }
  if (pos > neg) return pos_sum / pos;
  if (neg > pos) return neg_sum / neg;
  if (pos == 0) return 0.0;
  return all_sum / values.size();
}

AggregatedUpdate aggregate_adjustments(const AdjustmentField& field) {
  std::vector<std::vector<double>> wall_groups(field.wall_count);
  std::vector<std::vector<double>> cam_x(field.camera_count), cam_y(field.camera_count);
  for (const auto& e : field.entries) {
    if (!e.valid) continue;
    if (e.active[0]) wall_groups[e.wall_id].push_back(e.delta_b);
    if (e.active[1]) cam_x[e.camera_index].push_back(e.delta_t.x());
    if (e.active[2]) cam_y[e.camera_index].push_back(e.delta_t.y());
  }
  AggregatedUpdate out;
  out.wall_delta.resize(field.wall_count, 0.0);
  out.camera_delta.resize(field.camera_count, Vec2::Zero());
  for (std::size_t w = 0; w < field.wall_count; ++w) out.wall_delta[w] = majority_mean(wall_groups[w]);
  for (std::size_t c = 0; c < field.camera_count; ++c) {
    out.camera_delta[c] = {majority_mean(cam_x[c]), majority_mean(cam_y[c])};
  }
  return out;
}

ApplyResult apply_adjustments(const Scene& scene, const AggregatedUpdate& update,
                              double step_scale) {
  if (update.wall_delta.size() != scene.wall_count() ||
      update.camera_delta.size() != scene.cameras.size()) {
    fail(ErrorCode::kInvalidArgument, "update shape does not match scene");
  }
  ApplyResult result{scene, {}};
  Scene& out = result.scene;

  int gid = 0;
  for (auto& room : out.rooms) {
    const std::size_t k = room.walls.size();
    const int first = gid;
    gid += static_cast<int>(k);
    bool touched = false;
    for (std::size_t e = 0; e < k; ++e) touched |= update.wall_delta[first + e] != 0.0;
    if (!touched) continue;

    std::vector<Vec2> directions(k);
    std::vector<double> offsets(k);
    for (std::size_t e = 0; e < k; ++e) {
      directions[e] = room.walls[e].direction;
      offsets[e] = room.walls[e].offset;
    }
    const std::vector<double> base_len = wall_lengths(room.walls, room.vertices);

    // Walls are admitted one at a time so that a single bad update does not
    // block the rest of the room.
    std::vector<Vec2> accepted = room.vertices;
    for (std::size_t e = 0; e < k; ++e) {
      const double delta = step_scale * update.wall_delta[first + e];
      if (delta == 0.0) continue;
      std::vector<double> trial = offsets;
      trial[e] += delta;
      const std::vector<Vec2> verts = vertices_from_offsets(directions, trial);
      const std::vector<double> len = wall_lengths(room.walls, verts);
      bool ok = std::all_of(verts.begin(), verts.end(), in_band);
      for (std::size_t i = 0; i < k && ok; ++i) {
        if (base_len[i] > kMinWallLength && len[i] <= kMinWallLength) ok = false;
      }
      if (!ok) {
        result.warnings.push_back("skipped update of wall " + std::to_string(first + e) +
                                  " (room " + std::to_string(room.id) + ")");
        continue;
      }
      offsets = std::move(trial);
      accepted = verts;
    }
    room.vertices = std::move(accepted);
    for (std::size_t e = 0; e < k; ++e) room.walls[e].offset = offsets[e];
  }

  for (std::size_t c = 0; c < out.cameras.size(); ++c) {
    const Vec2& d = update.camera_delta[c];
    if (d.x() == 0.0 && d.y() == 0.0) continue;
    Vec2 p = out.cameras[c].position + step_scale * d;
    if (!in_band(p)) {
      result.warnings.push_back("clamped camera " + std::to_string(out.cameras[c].id) +
                                " to the guard band");
      p = p.cwiseMax(-kGuardBand).cwiseMin(kGuardBand);
    }
    out.cameras[c].position = p;
  }
  return result;
}

OptimizeResult optimize(const Scene& start,
                        std::span<const BoundaryObservation> boundaries,
                        std::span<const ColumnAssignment> assignments,
                        const ImageGeometry& geom, const OptimizerConfig& config,
                        bool noisy_boundaries) {
  config.validate();
  if (start.rooms.empty()) fail(ErrorCode::kInvalidArgument, "scene has no rooms");
  FieldConfig field_config;
  field_config.lm_damping = config.lm_damping;
  field_config.robust = config.robust;
  field_config.mask_probability = config.mask_probability;
  field_config.mask_seed = config.mask_seed;

  OptimizeResult result{start, {}, {}, 0, false};
  for (int it = 0; it < config.iterations; ++it) {
    field_config.mask_round = static_cast<std::uint64_t>(it);
    const AdjustmentField field =
        compute_adjustment_field(result.scene, boundaries, assignments, geom, field_config);
    AggregatedUpdate update = aggregate_adjustments(field);
    if (config.fix_walls) std::fill(update.wall_delta.begin(), update.wall_delta.end(), 0.0);
    if (config.fix_cameras) {
      std::fill(update.camera_delta.begin(), update.camera_delta.end(), Vec2::Zero());
    }

    TraceRow row;
    row.iteration = it;
    row.mean_abs_reproj_px = mean_abs_residual(field);
    for (double d : update.wall_delta) {
      row.max_wall_update = std::max(row.max_wall_update, std::abs(config.step_scale * d));
    }
    for (const Vec2& d : update.camera_delta) {
      row.max_cam_update = std::max(row.max_cam_update, (config.step_scale * d).norm());
    }
    result.trace.push_back(row);
    ++result.iterations_run;

    if (std::max(row.max_wall_update, row.max_cam_update) < config.convergence_tol) {
      result.converged = true;
      break;
    }
    ApplyResult applied = apply_adjustments(result.scene, update, config.step_scale);
    result.scene = std::move(applied.scene);
    for (auto& w : applied.warnings) {
      result.warnings.push_back("iteration " + std::to_string(it) + ": " + w);
    }
  }

  field_config.mask_probability = 0.0;
  const AdjustmentField final_field =
      compute_adjustment_field(result.scene, boundaries, assignments, geom, field_config);
  TraceRow last;
  last.iteration = result.iterations_run;
  last.mean_abs_reproj_px = mean_abs_residual(final_field);
  result.trace.push_back(last);

  if (!result.trace.empty() &&
      last.mean_abs_reproj_px > result.trace.front().mean_abs_reproj_px) {
    result.warnings.push_back(
        std::string("mean reprojection error increased over the run") +
        (noisy_boundaries ? " (noisy boundaries)" : ""));
  }
  return result;
}

std::string trace_csv(std::span<const TraceRow> trace) {
  std::ostringstream os;
  os << "iter,mean_abs_reproj_px,max_wall_update,max_cam_update\n";
  for (const auto& r : trace) {
    os << r.iteration << ',' << format_double(r.mean_abs_reproj_px) << ','
       << format_double(r.max_wall_update) << ',' << format_double(r.max_cam_update) << '\n';
  }
  return os.str();
}

}  // namespace planar_ba
