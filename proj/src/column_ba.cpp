#include "planar_ba/column_ba.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "planar_ba/error.hpp"
#include "planar_ba/format.hpp"
#include "planar_ba/rng.hpp"

namespace planar_ba {

namespace {
constexpr double kGrazing = 1e-9;
constexpr double kZeroGradient = 1e-12;

// Range along the ray at which the observed row would be produced.
std::optional<double> observed_range(double row, double z, int rows) {
  const double depression = kPi * (row / rows - 0.5);
  if (!(depression > 1e-12) || depression >= 0.5 * kPi) return std::nullopt;
  return z / std::tan(depression);
}
}  // namespace

std::optional<double> column_residual(const Wall& wall, const CameraPose& camera,
                                      double observed_row, int column,
                                      const ImageGeometry& geom) {
  const auto projected = project_column(wall, camera, column, geom);
  if (!projected) return std::nullopt;
  return *projected - observed_row;
}

std::optional<Vec3> column_jacobian(const Wall& wall, const CameraPose& camera,
                                    int column, const ImageGeometry& geom) {
  const Vec2 ray = column_ray(camera, column, geom);
  const double nr = wall.normal.dot(ray);
  if (std::abs(nr) < kGrazing) return std::nullopt;
  const double d = (wall.offset - wall.normal.dot(camera.position)) / nr;
  if (!(d > 0.0)) return std::nullopt;
  const double z = camera.height;
  const double drow_dd = -(geom.height() / kPi) * z / (d * d + z * z);
  // d(d)/db = 1/(n.r), d(d)/dT = -n/(n.r)
  return Vec3{drow_dd / nr, -drow_dd * wall.normal.x() / nr,
              -drow_dd * wall.normal.y() / nr};
}

LmStep lm_step(double residual, const Vec3& jacobian, double damping) {
  if (!(damping > 0.0)) fail(ErrorCode::kInvalidArgument, "LM damping must be positive");
  if (!jacobian.allFinite() || !std::isfinite(residual)) {
    fail(ErrorCode::kNumeric, "non-finite residual or Jacobian");
  }
  LmStep step;
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    step.active[i] = std::abs(jacobian[i]) >= kZeroGradient;
    n += step.active[i] ? 1 : 0;
  }
  if (n == 0) {
    step.degenerate = true;
    return step;
  }
  // J J^T + lambda diag(J_i^2) is rank one plus diagonal, and its solve against
  // -J eps reduces to delta_i = -eps / ((n + lambda) J_i).
  const double scale = -residual / (n + damping);
  for (int i = 0; i < 3; ++i) {
    if (step.active[i]) step.delta[i] = scale / jacobian[i];
  }
  return step;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double median_absolute_deviation(std::span<const double> values) {
  const double med = median_of({values.begin(), values.end()});
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - med));
  return median_of(std::move(dev));
}

double huber_soft_clamp(double x, double delta) {
  const double a = std::abs(x);
  if (a <= delta) return x;
  return std::copysign(std::sqrt(delta * (2.0 * a - delta)), x);
}

std::vector<double> robust_filter(std::span<const double> values,
                                  const RobustFilterConfig& config) {
  const double delta =
      std::max(config.k * median_absolute_deviation(values), config.delta_min);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(huber_soft_clamp(v, delta));
  return out;
}

std::size_t AdjustmentField::valid_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const ColumnAdjustment& e) { return e.valid; }));
}

AdjustmentField compute_adjustment_field(const Scene& scene,
                                         std::span<const BoundaryObservation> boundaries,
                                         std::span<const ColumnAssignment> assignments,
                                         const ImageGeometry& geom,
                                         const FieldConfig& config) {
  const std::size_t cameras = scene.cameras.size();
  if (boundaries.size() != cameras || assignments.size() != cameras) {
    fail(ErrorCode::kInvalidArgument, "need one boundary and assignment per camera");
  }
  const std::size_t walls = scene.wall_count();
  AdjustmentField field;
  field.camera_count = cameras;
  field.wall_count = walls;
  field.width = geom.width();

  for (std::size_t i = 0; i < cameras; ++i) {
    const CameraPose& cam = scene.cameras[i];
    const auto& rows = boundaries[i].rows;
    const auto& assigned = assignments[i].walls;
    if (boundaries[i].camera_id != cam.id || assignments[i].camera_id != cam.id) {
      fail(ErrorCode::kInvalidArgument,
           "observation order does not match camera " + std::to_string(cam.id));
    }
    if (static_cast<int>(rows.size()) != geom.width() ||
        static_cast<int>(assigned.size()) != geom.width()) {
      fail(ErrorCode::kInvalidArgument, "observation width does not match geometry");
    }
    for (int c = 0; c < geom.width(); ++c) {
      const int gid = assigned[c];
      if (gid == kUnassigned || !rows[c]) continue;
      if (gid < 0 || static_cast<std::size_t>(gid) >= walls) {
        fail(ErrorCode::kInvalidArgument, "assignment references unknown wall " +
                                              std::to_string(gid));
      }
      if (config.mask_probability > 0.0) {
        const std::uint64_t h = derive_seed(
            config.mask_seed, {config.mask_round, static_cast<std::uint64_t>(cam.id),
                               static_cast<std::uint64_t>(c)});
        if (hash_uniform(h) < config.mask_probability) continue;
      }
      ColumnAdjustment adj;
      adj.camera_index = static_cast<int>(i);
      adj.camera_id = cam.id;
      adj.wall_id = gid;
      adj.column = c;
      adj.observed_row = *rows[c];

      const Wall& wall = scene.wall(gid);
      const auto residual = column_residual(wall, cam, *rows[c], c, geom);
      const auto jac = residual ? column_jacobian(wall, cam, c, geom) : std::nullopt;
      if (residual && jac) {
        const LmStep step = lm_step(*residual, *jac, config.lm_damping);
        adj.valid = true;
        adj.residual = *residual;
        adj.projected_row = *residual + *rows[c];
        adj.delta_b = step.delta[0];
        adj.delta_t = {step.delta[1], step.delta[2]};
        adj.active = step.active;
        const Vec2 ray = column_ray(cam, c, geom);
        const double t = (wall.offset - wall.normal.dot(cam.position)) / wall.normal.dot(ray);
        if (const auto d_obs = observed_range(*rows[c], cam.height, geom.height())) {
          adj.hit_displacement = (*d_obs - t) * ray;
        }
      }
      field.entries.push_back(adj);
    }
  }

  // Robust filtering per wall (delta_b) and per camera (each delta_t axis).
  auto filter_group = [&](auto key_of, auto get, auto set, int component) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t e = 0; e < field.entries.size(); ++e) {
      const auto& adj = field.entries[e];
      if (adj.valid && adj.active[component]) groups[key_of(adj)].push_back(e);
    }
    for (const auto& [key, members] : groups) {
      std::vector<double> values;
      values.reserve(members.size());
      for (std::size_t e : members) values.push_back(get(field.entries[e]));
      const auto filtered = robust_filter(values, config.robust);
      for (std::size_t m = 0; m < members.size(); ++m) set(field.entries[members[m]], filtered[m]);
    }
  };
  filter_group([](const ColumnAdjustment& a) { return a.wall_id; },
               [](const ColumnAdjustment& a) { return a.delta_b; },
               [](ColumnAdjustment& a, double v) { a.delta_b = v; }, 0);
  filter_group([](const ColumnAdjustment& a) { return a.camera_index; },
               [](const ColumnAdjustment& a) { return a.delta_t.x(); },
               [](ColumnAdjustment& a, double v) { a.delta_t.x() = v; }, 1);
  filter_group([](const ColumnAdjustment& a) { return a.camera_index; },
               [](const ColumnAdjustment& a) { return a.delta_t.y(); },
               [](ColumnAdjustment& a, double v) { a.delta_t.y() = v; }, 2);
  return field;
}

std::string adjustment_field_csv(const AdjustmentField& field) {
  std::ostringstream os;
  os << "camera_id,wall_id,column,delta_b,delta_tx,delta_ty\n";
  for (const auto& e : field.entries) {
    if (!e.valid) continue;
    os << e.camera_id << ',' << e.wall_id << ',' << e.column << ','
       << format_double(e.delta_b, 17) << ',' << format_double(e.delta_t.x(), 17) << ','
       << format_double(e.delta_t.y(), 17) << '\n';
  }
  return os.str();
}

}  // namespace planar_ba
