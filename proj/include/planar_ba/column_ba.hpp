#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planar_ba/renderer.hpp"
#include "planar_ba/scene.hpp"

namespace planar_ba {

/// Signed reprojection residual B_hat - B_obs in pixel rows.
std::optional<double> column_residual(const Wall& wall, const CameraPose& camera,
                                      double observed_row, int column,
                                      const ImageGeometry& geom);

/// Analytic [d eps/d b, d eps/d T_x, d eps/d T_y]. None for grazing rays
/// (|n . r| < 1e-9) or hits behind the camera.
std::optional<Vec3> column_jacobian(const Wall& wall, const CameraPose& camera,
                                    int column, const ImageGeometry& geom);

struct LmStep {
  Vec3 delta = Vec3::Zero();          // (delta_b, delta_tx, delta_ty)
  std::array<bool, 3> active{};       // components with |J_i| >= 1e-12
  bool degenerate = false;            // no active component
};

/// One damped step  -(J^T J + lambda diag(J^T J))^-1 J^T eps  on the active
/// components.
LmStep lm_step(double residual, const Vec3& jacobian, double damping);

struct RobustFilterConfig {
  double k = 1.345;
  double delta_min = 1e-6;
};

double median_of(std::vector<double> values);
/// Median absolute deviation from the median.
double median_absolute_deviation(std::span<const double> values);
double huber_soft_clamp(double x, double delta);
/// Soft-clamps a group with delta = max(k * MAD, delta_min).
std::vector<double> robust_filter(std::span<const double> values,
                                  const RobustFilterConfig& config = {});

struct ColumnAdjustment {
  int camera_index = 0;
  int camera_id = 0;
  int wall_id = kUnassigned;
  int column = 0;
  double delta_b = 0.0;
  Vec2 delta_t = Vec2::Zero();
  std::array<bool, 3> active{};
  bool valid = false;
  double residual = 0.0;       // signed, pixel rows
  double observed_row = 0.0;
  double projected_row = 0.0;
  /// Offset from the projected wall hit to the hit implied by the observed
  /// row, along the column ray.
  Vec2 hit_displacement = Vec2::Zero();
};

/// Sparse per-(camera, column) adjustments. Only assigned columns with an
/// observation appear; `valid` is false where the geometry was ill-posed.
struct AdjustmentField {
  std::size_t camera_count = 0;
  std::size_t wall_count = 0;
  int width = 0;
  std::vector<ColumnAdjustment> entries;

  std::size_t valid_count() const;
};

struct FieldConfig {
  double lm_damping = 0.1;
  RobustFilterConfig robust;
  double mask_probability = 0.0;
  std::uint64_t mask_seed = 0;
  std::uint64_t mask_round = 0;
};

/// Boundaries and assignments are indexed like scene.cameras.
AdjustmentField compute_adjustment_field(const Scene& scene,
                                         std::span<const BoundaryObservation> boundaries,
                                         std::span<const ColumnAssignment> assignments,
                                         const ImageGeometry& geom,
                                         const FieldConfig& config = {});

/// camera_id,wall_id,column,delta_b,delta_tx,delta_ty
std::string adjustment_field_csv(const AdjustmentField& field);

}  // namespace planar_ba
