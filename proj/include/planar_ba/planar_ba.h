#ifndef PLANAR_BA_H
#define PLANAR_BA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PLANAR_BA_BUILDING)
#    define PBA_API __declspec(dllexport)
#  else
#    define PBA_API __declspec(dllimport)
#  endif
#else
#  define PBA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pba_status {
  PBA_OK = 0,
  PBA_ERR_INVALID_ARGUMENT = 1,
  PBA_ERR_VALIDATION = 2,
  PBA_ERR_IO = 3,
  PBA_ERR_NUMERIC = 4,
  PBA_ERR_INTERNAL = 5
} pba_status;

/* Message of the last failed call on this thread, or "" after a success. */
PBA_API const char* pba_last_error(void);
PBA_API const char* pba_version(void);
/* Frees any char* returned through an out parameter. */
PBA_API void pba_string_free(char* s);

typedef struct pba_scene pba_scene;
typedef struct pba_observations pba_observations;
typedef struct pba_metrics pba_metrics;

typedef struct pba_camera {
  int id;
  double x;
  double y;
  double rotation;
  double height;
} pba_camera;

typedef struct pba_wall {
  int room_id;
  int vertex_id;
  double direction_x;
  double direction_y;
  double normal_x;
  double normal_y;
  double offset;
} pba_wall;

/* Scenes */

PBA_API pba_status pba_scene_from_json(const char* json, pba_scene** out);
PBA_API pba_status pba_scene_load(const char* path, pba_scene** out);
PBA_API pba_status pba_scene_to_json(const pba_scene* scene, char** out);
PBA_API pba_status pba_scene_save(const pba_scene* scene, const char* path);
PBA_API pba_status pba_scene_clone(const pba_scene* scene, pba_scene** out);
PBA_API void pba_scene_free(pba_scene* scene);
/* Maps a raw scene into the normalized frame. */
PBA_API pba_status pba_scene_normalize(const pba_scene* raw, pba_scene** out);
/* PBA_ERR_VALIDATION when any invariant is broken. report_json (optional)
 * receives the list of issues either way. */
PBA_API pba_status pba_scene_validate(const pba_scene* scene, char** report_json);

PBA_API int pba_scene_is_normalized(const pba_scene* scene);
PBA_API size_t pba_scene_room_count(const pba_scene* scene);
PBA_API size_t pba_scene_wall_count(const pba_scene* scene);
PBA_API size_t pba_scene_camera_count(const pba_scene* scene);
PBA_API pba_status pba_scene_camera(const pba_scene* scene, size_t index, pba_camera* out);
PBA_API pba_status pba_scene_wall(const pba_scene* scene, size_t global_id, pba_wall* out);

/* Simulation */

typedef struct pba_floorplan_config {
  int min_rooms;
  int max_rooms;
  double extent;
  double min_room_size;
  double notch_probability;
} pba_floorplan_config;

typedef struct pba_camera_config {
  double height;
  double margin_fraction;
} pba_camera_config;

typedef struct pba_boundary_noise {
  double chance;
  double max_scale;
  uint64_t seed;
} pba_boundary_noise;

PBA_API pba_floorplan_config pba_floorplan_config_default(void);
PBA_API pba_camera_config pba_camera_config_default(void);

PBA_API pba_status pba_generate_floorplan(uint64_t seed, const pba_floorplan_config* config,
                                          pba_scene** out);
/* Replaces the cameras of `scene`. */
PBA_API pba_status pba_sample_cameras(pba_scene* scene, double imgs_per_room, uint64_t seed,
                                      const pba_camera_config* config);
PBA_API pba_status pba_perturb_scene(const pba_scene* scene, double sigma, uint64_t seed,
                                     pba_scene** out);

/* Observations: one floor boundary and column assignment per camera. */

/* noise may be NULL for clean renders. */
PBA_API pba_status pba_render(const pba_scene* scene, int width, const pba_boundary_noise* noise,
                              pba_observations** out);
PBA_API pba_status pba_observations_create(int width, pba_observations** out);
PBA_API pba_status pba_observations_add_json(pba_observations* obs, const char* json);
PBA_API size_t pba_observations_count(const pba_observations* obs);
PBA_API int pba_observations_width(const pba_observations* obs);
PBA_API int pba_observations_camera_id(const pba_observations* obs, size_t index);
PBA_API pba_status pba_observations_camera_json(const pba_observations* obs, size_t index,
                                                char** out);
PBA_API void pba_observations_free(pba_observations* obs);

/* Refinement */

typedef struct pba_optimizer_config {
  int iterations;
  double step_scale;
  double lm_damping;
  double convergence_tol;
  int fix_walls;
  int fix_cameras;
  double mask_probability;
  uint64_t mask_seed;
  double huber_k;
  double huber_delta_min;
} pba_optimizer_config;

PBA_API pba_optimizer_config pba_optimizer_config_default(void);

/* out_trace_csv, out_warnings (newline separated), iterations_run and
 * converged are optional. */
PBA_API pba_status pba_optimize(const pba_scene* start, const pba_observations* obs,
                                const pba_optimizer_config* config, int noisy_boundaries,
                                pba_scene** out_scene, char** out_trace_csv,
                                char** out_warnings, int* iterations_run, int* converged);

/* Conditioning statistics and the raw adjustment field of one state. */
PBA_API pba_status pba_features(const pba_scene* scene, const pba_observations* obs,
                                double lm_damping, char** stats_csv, char** field_csv);

PBA_API pba_status pba_mean_reprojection(const pba_scene* scene, const pba_observations* obs,
                                         double* out_px);

/* Evaluation */

typedef struct pba_ransac_config {
  double inlier_threshold;
  int iterations;
  uint64_t seed;
} pba_ransac_config;

PBA_API pba_ransac_config pba_ransac_config_default(void);

PBA_API pba_status pba_metrics_create(pba_metrics** out);
PBA_API void pba_metrics_free(pba_metrics* metrics);
/* Safe to call from several threads on one suite. */
PBA_API pba_status pba_metrics_add_floor(pba_metrics* metrics, const char* floor,
                                         const pba_scene* pred, const pba_scene* gt,
                                         const pba_observations* obs,
                                         const pba_ransac_config* ransac, char** out_warnings);
PBA_API pba_status pba_metrics_add_error(pba_metrics* metrics, const char* floor,
                                         const char* message);
PBA_API size_t pba_metrics_floor_count(const pba_metrics* metrics);
PBA_API pba_status pba_metrics_csv(const pba_metrics* metrics, char** out);
PBA_API pba_status pba_metrics_summary_json(const pba_metrics* metrics, const char* label,
                                            char** out);
/* JSON list of {floor, error} for floors that could not be evaluated. */
PBA_API pba_status pba_metrics_errors_json(const pba_metrics* metrics, char** out);

/* Reports */

PBA_API pba_status pba_report_triptych_svg(const pba_scene* before, const pba_scene* after,
                                           const pba_scene* gt, char** out);
PBA_API pba_status pba_report_camera_svg(const pba_scene* scene, const pba_observations* obs,
                                         size_t camera_index, char** out);

#ifdef __cplusplus
}
#endif

#endif
