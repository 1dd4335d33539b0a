#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "planar_ba/layout.hpp"
#include "planar_ba/renderer.hpp"
#include "planar_ba/scene.hpp"

namespace planar_ba {

struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population
  double p90 = 0.0;
  std::size_t count = 0;
};

/// Quantile by linear interpolation between order statistics at q * (n - 1).
double quantile(std::vector<double> values, double q);
ErrorStats compute_stats(std::span<const double> values);

struct RigidTransform2 {
  double angle = 0.0;
  Vec2 translation = Vec2::Zero();

  Vec2 apply(const Vec2& p) const { return rotate(p, angle) + translation; }
};

/// Least-squares rotation + translation mapping src onto dst.
RigidTransform2 fit_rigid(std::span<const Vec2> src, std::span<const Vec2> dst);

struct RansacConfig {
  double inlier_threshold = 0.1 * kNormalizedExtent;
  int iterations = 1000;
  std::uint64_t seed = 0;
};

struct Alignment {
  RigidTransform2 transform;
  std::vector<bool> inliers;
  std::vector<std::string> warnings;
};

/// Consensus over two-point minimal samples (every pair when there are no
/// more pairs than iterations), refined by least squares over the inliers.
Alignment ransac_align(std::span<const Vec2> pred, std::span<const Vec2> gt,
                       const RansacConfig& config);

struct PoseErrors {
  std::vector<double> translation_pct;  // % of kNormalizedExtent
  std::vector<double> translation_raw;  // raw scene units
  std::vector<double> rotation_deg;
};

/// Rotation error is |R_pred - R_gt| without the alignment rotation: camera
/// rotations are constants of the refinement.
PoseErrors pose_errors(std::span<const CameraPose> pred, std::span<const CameraPose> gt,
                       const RigidTransform2& transform, double raw_scale = 1.0);

/// A wall is visible when some column of some camera is assigned to it.
std::vector<bool> visible_walls(const Scene& scene,
                                std::span<const ColumnAssignment> assignments);

struct LayoutErrors {
  std::vector<double> wall_pct;    // |b_pred - b_gt| per visible wall
  std::vector<double> vertex_pct;  // endpoints of visible walls
};

LayoutErrors layout_errors(const Scene& pred, const Scene& gt, const std::vector<bool>& visible,
                           const RigidTransform2& transform);

/// |B_hat - B_obs| in pixels for every assigned valid column.
std::vector<double> reprojection_errors(const Scene& scene,
                                        std::span<const BoundaryObservation> boundaries,
                                        std::span<const ColumnAssignment> assignments,
                                        const ImageGeometry& geom);

/// L2 norm over camera positions and the mask-valid vertex coordinates.
double masked_l2_metric(const Scene& pred, const Scene& gt,
                        std::span<const ValidityMask> masks);
std::vector<ValidityMask> scene_validity_masks(const Scene& scene);
/// masked_l2 + 100 * mean reprojection error as a fraction of image rows.
double combined_objective(double masked_l2, double mean_reproj_px, int rows);

struct FloorMetrics {
  PoseErrors pose;
  LayoutErrors layout;
  std::vector<double> reprojection_px;
  double masked_l2 = 0.0;
  double objective = 0.0;
  std::size_t wall_count = 0;
  std::size_t camera_count = 0;
  std::vector<std::string> warnings;
};

FloorMetrics evaluate_floor(const Scene& pred, const Scene& gt,
                            std::span<const BoundaryObservation> boundaries,
                            std::span<const ColumnAssignment> assignments,
                            const ImageGeometry& geom, const RansacConfig& ransac);

/// Pools per-floor metrics for a suite. Thread-safe; output is ordered by
/// floor name.
class MetricsSuite {
 public:
  void add(const std::string& floor, FloorMetrics metrics);
  void add_error(const std::string& floor, const std::string& message);

  std::size_t floor_count() const;
  std::vector<std::pair<std::string, std::string>> errors() const;
  ErrorStats pooled(const std::string& metric) const;

  /// floor,metric,unit,mean,median,std,p90 with a final "all" block.
  std::string csv() const;
  /// One Table-2 style row.
  nlohmann::ordered_json summary_row(const std::string& label) const;

 private:
  std::vector<double> pooled_values(const std::string& metric) const;

  /// Numeric floor names sort by value, others lexicographically after them.
  struct FloorOrder {
    bool operator()(const std::string& a, const std::string& b) const;
  };

  mutable std::mutex mutex_;
  std::map<std::string, FloorMetrics, FloorOrder> floors_;
  std::map<std::string, std::string, FloorOrder> errors_;
};

}  // namespace planar_ba
