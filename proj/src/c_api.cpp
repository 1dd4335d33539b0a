#include "planar_ba/planar_ba.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "planar_ba/conditioning.hpp"
#include "planar_ba/error.hpp"
#include "planar_ba/evaluation.hpp"
#include "planar_ba/optimizer.hpp"
#include "planar_ba/report.hpp"
#include "planar_ba/scene_io.hpp"
#include "planar_ba/simulation.hpp"

#ifndef PLANAR_BA_VERSION
#define PLANAR_BA_VERSION "0.0.0"
#endif

struct pba_scene {
  planar_ba::Scene scene;
};

struct pba_observations {
  int width = 512;
  std::vector<planar_ba::BoundaryObservation> boundaries;
  std::vector<planar_ba::ColumnAssignment> assignments;
};

struct pba_metrics {
  planar_ba::MetricsSuite suite;
};

namespace {

using namespace planar_ba;

thread_local std::string g_last_error;

pba_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return PBA_ERR_INVALID_ARGUMENT;
    case ErrorCode::kValidation: return PBA_ERR_VALIDATION;
    case ErrorCode::kIo: return PBA_ERR_IO;
    case ErrorCode::kNumeric: return PBA_ERR_NUMERIC;
  }
  return PBA_ERR_INTERNAL;
}

template <typename F>
pba_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PBA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return PBA_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PBA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PBA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PBA_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void set_string(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

/// Observations reordered to follow scene.cameras.
struct Aligned {
  std::vector<BoundaryObservation> boundaries;
  std::vector<ColumnAssignment> assignments;
};

Aligned align_observations(const Scene& scene, const pba_observations& obs) {
  Aligned a;
  for (const auto& cam : scene.cameras) {
    std::size_t k = 0;
    while (k < obs.boundaries.size() && obs.boundaries[k].camera_id != cam.id) ++k;
    if (k == obs.boundaries.size()) {
      fail(ErrorCode::kValidation, "no observation for camera " + std::to_string(cam.id));
    }
    a.boundaries.push_back(obs.boundaries[k]);
    a.assignments.push_back(obs.assignments[k]);
  }
  return a;
}

OptimizerConfig to_core(const pba_optimizer_config& c) {
  OptimizerConfig o;
  o.iterations = c.iterations;
  o.step_scale = c.step_scale;
  o.lm_damping = c.lm_damping;
  o.convergence_tol = c.convergence_tol;
  o.fix_walls = c.fix_walls != 0;
  o.fix_cameras = c.fix_cameras != 0;
  o.mask_probability = c.mask_probability;
  o.mask_seed = c.mask_seed;
  o.robust.k = c.huber_k;
  o.robust.delta_min = c.huber_delta_min;
  return o;
}

}  // namespace

extern "C" {

const char* pba_last_error(void) { return g_last_error.c_str(); }
const char* pba_version(void) { return PLANAR_BA_VERSION; }
void pba_string_free(char* s) { std::free(s); }

pba_status pba_scene_from_json(const char* json, pba_scene** out) {
  return guarded([&] {
    require(json && out, "null argument");
    auto s = std::make_unique<pba_scene>();
    s->scene = scene_from_json(nlohmann::json::parse(json));
    *out = s.release();
  });
}

pba_status pba_scene_load(const char* path, pba_scene** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto s = std::make_unique<pba_scene>();
    s->scene = scene_from_json(read_json_file(path));
    *out = s.release();
  });
}

pba_status pba_scene_to_json(const pba_scene* scene, char** out) {
  return guarded([&] {
    require(scene && out, "null argument");
    *out = dup_string(dump_json(scene_to_json(scene->scene)));
  });
}

pba_status pba_scene_save(const pba_scene* scene, const char* path) {
  return guarded([&] {
    require(scene && path, "null argument");
    write_text_file(path, dump_json(scene_to_json(scene->scene)));
  });
}

pba_status pba_scene_clone(const pba_scene* scene, pba_scene** out) {
  return guarded([&] {
    require(scene && out, "null argument");
    *out = new pba_scene(*scene);
  });
}

void pba_scene_free(pba_scene* scene) { delete scene; }

pba_status pba_scene_normalize(const pba_scene* raw, pba_scene** out) {
  return guarded([&] {
    require(raw && out, "null argument");
    auto s = std::make_unique<pba_scene>();
    s->scene = normalize_scene(raw->scene);
    *out = s.release();
  });
}

pba_status pba_scene_validate(const pba_scene* scene, char** report_json) {
  ValidationReport report;
  const pba_status st = guarded([&] {
    require(scene, "null argument");
    report = validate_scene(scene->scene);
    if (report_json) {
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const auto& issue : report.issues) {
        j.push_back({{"kind", issue.kind}, {"message", issue.message}});
      }
      *report_json = dup_string(j.dump(2) + "\n");
    }
  });
  if (st != PBA_OK || report.ok()) return st;
  g_last_error = report.issues.front().kind + ": " + report.issues.front().message;
  return PBA_ERR_VALIDATION;
}

int pba_scene_is_normalized(const pba_scene* scene) {
  return scene && scene->scene.norm_transform ? 1 : 0;
}

size_t pba_scene_room_count(const pba_scene* scene) {
  return scene ? scene->scene.rooms.size() : 0;
}
size_t pba_scene_wall_count(const pba_scene* scene) {
  return scene ? scene->scene.wall_count() : 0;
}
size_t pba_scene_camera_count(const pba_scene* scene) {
  return scene ? scene->scene.cameras.size() : 0;
}

pba_status pba_scene_camera(const pba_scene* scene, size_t index, pba_camera* out) {
  return guarded([&] {
    require(scene && out, "null argument");
    require(index < scene->scene.cameras.size(), "camera index out of range");
    const CameraPose& c = scene->scene.cameras[index];
    *out = {c.id, c.position.x(), c.position.y(), c.rotation, c.height};
  });
}

pba_status pba_scene_wall(const pba_scene* scene, size_t global_id, pba_wall* out) {
  return guarded([&] {
    require(scene && out, "null argument");
    require(global_id < scene->scene.wall_count(), "wall id out of range");
    const Wall& w = scene->scene.wall(static_cast<int>(global_id));
    *out = {w.room_id,       w.vertex_id,     w.direction.x(), w.direction.y(),
            w.normal.x(),    w.normal.y(),    w.offset};
  });
}

pba_floorplan_config pba_floorplan_config_default(void) {
  const FloorplanConfig c;
  return {c.min_rooms, c.max_rooms, c.extent, c.min_room_size, c.notch_probability};
}

pba_camera_config pba_camera_config_default(void) {
  const CameraSamplingConfig c;
  return {c.height, c.margin_fraction};
}

pba_status pba_generate_floorplan(uint64_t seed, const pba_floorplan_config* config,
                                  pba_scene** out) {
  return guarded([&] {
    require(out, "null argument");
    const pba_floorplan_config c = config ? *config : pba_floorplan_config_default();
    FloorplanConfig fc;
    fc.min_rooms = c.min_rooms;
    fc.max_rooms = c.max_rooms;
    fc.extent = c.extent;
    fc.min_room_size = c.min_room_size;
    fc.notch_probability = c.notch_probability;
    auto s = std::make_unique<pba_scene>();
    s->scene = generate_floorplan(seed, fc);
    *out = s.release();
  });
}

pba_status pba_sample_cameras(pba_scene* scene, double imgs_per_room, uint64_t seed,
                              const pba_camera_config* config) {
  return guarded([&] {
    require(scene, "null argument");
    const pba_camera_config c = config ? *config : pba_camera_config_default();
    CameraSamplingConfig cc;
    cc.height = c.height;
    cc.margin_fraction = c.margin_fraction;
    scene->scene.cameras = sample_cameras(scene->scene, imgs_per_room, seed, cc);
  });
}

pba_status pba_perturb_scene(const pba_scene* scene, double sigma, uint64_t seed,
                             pba_scene** out) {
  return guarded([&] {
    require(scene && out, "null argument");
    auto s = std::make_unique<pba_scene>();
    s->scene = perturb_scene(scene->scene, sigma, seed);
    *out = s.release();
  });
}

pba_status pba_render(const pba_scene* scene, int width, const pba_boundary_noise* noise,
                      pba_observations** out) {
  return guarded([&] {
    require(scene && out, "null argument");
    const ImageGeometry geom(width);
    auto obs = std::make_unique<pba_observations>();
    obs->width = width;
    NoiseConfig nc;
    if (noise) {
      nc.boundary_chance = noise->chance;
      nc.boundary_max_scale = noise->max_scale;
      nc.seed = noise->seed;
      nc.validate();
    }
    for (const auto& cam : scene->scene.cameras) {
      auto [b, a] = noise ? perturb_boundaries(scene->scene, cam, geom, nc, nc.seed)
                          : render_boundary(scene->scene, cam, geom);
      obs->boundaries.push_back(std::move(b));
      obs->assignments.push_back(std::move(a));
    }
    *out = obs.release();
  });
}

pba_status pba_observations_create(int width, pba_observations** out) {
  return guarded([&] {
    require(out, "null argument");
    const ImageGeometry geom(width);
    auto obs = std::make_unique<pba_observations>();
    obs->width = geom.width();
    *out = obs.release();
  });
}

pba_status pba_observations_add_json(pba_observations* obs, const char* json) {
  return guarded([&] {
    require(obs && json, "null argument");
    BoundaryObservation b;
    ColumnAssignment a;
    boundary_from_json(nlohmann::json::parse(json), b, a);
    if (static_cast<int>(b.rows.size()) != obs->width) {
      fail(ErrorCode::kValidation, "boundary of camera " + std::to_string(b.camera_id) +
                                       " has " + std::to_string(b.rows.size()) +
                                       " columns, expected " + std::to_string(obs->width));
    }
    for (const auto& existing : obs->boundaries) {
      if (existing.camera_id == b.camera_id) {
        fail(ErrorCode::kValidation, "duplicate boundary for camera " +
                                         std::to_string(b.camera_id));
      }
    }
    obs->boundaries.push_back(std::move(b));
    obs->assignments.push_back(std::move(a));
  });
}

size_t pba_observations_count(const pba_observations* obs) {
  return obs ? obs->boundaries.size() : 0;
}

int pba_observations_width(const pba_observations* obs) { return obs ? obs->width : 0; }

int pba_observations_camera_id(const pba_observations* obs, size_t index) {
  return obs && index < obs->boundaries.size() ? obs->boundaries[index].camera_id : -1;
}

pba_status pba_observations_camera_json(const pba_observations* obs, size_t index, char** out) {
  return guarded([&] {
    require(obs && out, "null argument");
    require(index < obs->boundaries.size(), "observation index out of range");
    *out = dup_string(dump_json(boundary_to_json(obs->boundaries[index], obs->assignments[index])));
  });
}

void pba_observations_free(pba_observations* obs) { delete obs; }

pba_optimizer_config pba_optimizer_config_default(void) {
  const OptimizerConfig c;
  return {c.iterations,       c.step_scale,        c.lm_damping, c.convergence_tol,
          c.fix_walls ? 1 : 0, c.fix_cameras ? 1 : 0, c.mask_probability, c.mask_seed,
          c.robust.k,          c.robust.delta_min};
}

pba_status pba_optimize(const pba_scene* start, const pba_observations* obs,
                        const pba_optimizer_config* config, int noisy_boundaries,
                        pba_scene** out_scene, char** out_trace_csv, char** out_warnings,
                        int* iterations_run, int* converged) {
  return guarded([&] {
    require(start && obs && out_scene, "null argument");
    const OptimizerConfig oc = to_core(config ? *config : pba_optimizer_config_default());
    const Aligned a = align_observations(start->scene, *obs);
    OptimizeResult r = optimize(start->scene, a.boundaries, a.assignments,
                                ImageGeometry(obs->width), oc, noisy_boundaries != 0);
    auto s = std::make_unique<pba_scene>();
    s->scene = std::move(r.scene);
    const std::string trace = trace_csv(r.trace);
    const std::string warnings = join_lines(r.warnings);
    char* trace_c = out_trace_csv ? dup_string(trace) : nullptr;
    char* warn_c = nullptr;
    try {
      warn_c = out_warnings ? dup_string(warnings) : nullptr;
    } catch (...) {
      std::free(trace_c);
      throw;
    }
    if (out_trace_csv) *out_trace_csv = trace_c;
    if (out_warnings) *out_warnings = warn_c;
    if (iterations_run) *iterations_run = r.iterations_run;
    if (converged) *converged = r.converged ? 1 : 0;
    *out_scene = s.release();
  });
}

pba_status pba_features(const pba_scene* scene, const pba_observations* obs, double lm_damping,
                        char** stats_csv_out, char** field_csv_out) {
  return guarded([&] {
    require(scene && obs, "null argument");
    const Aligned a = align_observations(scene->scene, *obs);
    FieldConfig fc;
    fc.lm_damping = lm_damping;
    const AdjustmentField field = compute_adjustment_field(
        scene->scene, a.boundaries, a.assignments, ImageGeometry(obs->width), fc);
    const std::string stats = stats_csv(projected_stats(field, scene->scene));
    const std::string raw = adjustment_field_csv(field);
    char* stats_c = stats_csv_out ? dup_string(stats) : nullptr;
    try {
      set_string(field_csv_out, raw);
    } catch (...) {
      std::free(stats_c);
      throw;
    }
    if (stats_csv_out) *stats_csv_out = stats_c;
  });
}

pba_status pba_mean_reprojection(const pba_scene* scene, const pba_observations* obs,
                                 double* out_px) {
  return guarded([&] {
    require(scene && obs && out_px, "null argument");
    const Aligned a = align_observations(scene->scene, *obs);
    const auto errs =
        reprojection_errors(scene->scene, a.boundaries, a.assignments, ImageGeometry(obs->width));
    *out_px = compute_stats(errs).mean;
  });
}

pba_ransac_config pba_ransac_config_default(void) {
  const RansacConfig c;
  return {c.inlier_threshold, c.iterations, c.seed};
}

pba_status pba_metrics_create(pba_metrics** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new pba_metrics();
  });
}

void pba_metrics_free(pba_metrics* metrics) { delete metrics; }

pba_status pba_metrics_add_floor(pba_metrics* metrics, const char* floor, const pba_scene* pred,
                                 const pba_scene* gt, const pba_observations* obs,
                                 const pba_ransac_config* ransac, char** out_warnings) {
  return guarded([&] {
    require(metrics && floor && pred && gt && obs, "null argument");
    const pba_ransac_config rc = ransac ? *ransac : pba_ransac_config_default();
    RansacConfig cfg;
    cfg.inlier_threshold = rc.inlier_threshold;
    cfg.iterations = rc.iterations;
    cfg.seed = rc.seed;
    const Aligned a = align_observations(gt->scene, *obs);
    FloorMetrics m = evaluate_floor(pred->scene, gt->scene, a.boundaries, a.assignments,
                                    ImageGeometry(obs->width), cfg);
    const std::string warnings = join_lines(m.warnings);
    char* warn_c = out_warnings ? dup_string(warnings) : nullptr;
    metrics->suite.add(floor, std::move(m));
    if (out_warnings) *out_warnings = warn_c;
  });
}

pba_status pba_metrics_add_error(pba_metrics* metrics, const char* floor, const char* message) {
  return guarded([&] {
    require(metrics && floor && message, "null argument");
    metrics->suite.add_error(floor, message);
  });
}

size_t pba_metrics_floor_count(const pba_metrics* metrics) {
  return metrics ? metrics->suite.floor_count() : 0;
}

pba_status pba_metrics_csv(const pba_metrics* metrics, char** out) {
  return guarded([&] {
    require(metrics && out, "null argument");
    *out = dup_string(metrics->suite.csv());
  });
}

pba_status pba_metrics_summary_json(const pba_metrics* metrics, const char* label, char** out) {
  return guarded([&] {
    require(metrics && label && out, "null argument");
    *out = dup_string(dump_json(metrics->suite.summary_row(label)));
  });
}

pba_status pba_metrics_errors_json(const pba_metrics* metrics, char** out) {
  return guarded([&] {
    require(metrics && out, "null argument");
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& [floor, msg] : metrics->suite.errors()) {
      j.push_back({{"floor", floor}, {"error", msg}});
    }
    *out = dup_string(dump_json(j));
  });
}

pba_status pba_report_triptych_svg(const pba_scene* before, const pba_scene* after,
                                   const pba_scene* gt, char** out) {
  return guarded([&] {
    require(before && after && gt && out, "null argument");
    *out = dup_string(layout_triptych_svg(before->scene, after->scene, gt->scene));
  });
}

pba_status pba_report_camera_svg(const pba_scene* scene, const pba_observations* obs,
                                 size_t camera_index, char** out) {
  return guarded([&] {
    require(scene && obs && out, "null argument");
    require(camera_index < scene->scene.cameras.size(), "camera index out of range");
    const Aligned a = align_observations(scene->scene, *obs);
    *out = dup_string(camera_overlay_svg(scene->scene, camera_index, a.boundaries[camera_index],
                                         a.assignments[camera_index], ImageGeometry(obs->width)));
  });
}

}  // extern "C"
