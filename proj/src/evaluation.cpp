#include "planar_ba/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "planar_ba/column_ba.hpp"
#include "planar_ba/error.hpp"
#include "planar_ba/format.hpp"
#include "planar_ba/rng.hpp"

namespace planar_ba {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ErrorStats compute_stats(std::span<const double> values) {
  ErrorStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / sorted.size();
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / sorted.size());
  s.median = quantile(sorted, 0.5);
  s.p90 = quantile(sorted, 0.9);
  return s;
}

RigidTransform2 fit_rigid(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size() || src.empty()) {
    fail(ErrorCode::kInvalidArgument, "rigid fit needs matching non-empty point sets");
  }
  Vec2 sc = Vec2::Zero(), dc = Vec2::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    sc += src[i];
    dc += dst[i];
  }
  sc /= static_cast<double>(src.size());
  dc /= static_cast<double>(dst.size());
  double sin_sum = 0.0, cos_sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec2 a = src[i] - sc;
    const Vec2 b = dst[i] - dc;
    cos_sum += a.dot(b);
    sin_sum += cross(a, b);
  }
  RigidTransform2 t;
  t.angle = (sin_sum == 0.0 && cos_sum == 0.0) ? 0.0 : std::atan2(sin_sum, cos_sum);
  t.translation = dc - rotate(sc, t.angle);
  return t;
}

Alignment ransac_align(std::span<const Vec2> pred, std::span<const Vec2> gt,
                       const RansacConfig& config) {
  if (pred.size() != gt.size()) fail(ErrorCode::kInvalidArgument, "pose set sizes differ");
  Alignment result;
  const std::size_t n = pred.size();
  result.inliers.assign(n, true);
  if (n < 2) {
    result.warnings.push_back("fewer than two poses; using the identity alignment");
    return result;
  }

  std::vector<std::pair<std::size_t, std::size_t>> samples;
  const std::size_t pairs = n * (n - 1) / 2;
  if (pairs <= static_cast<std::size_t>(std::max(config.iterations, 1))) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) samples.emplace_back(i, j);
    }
  } else {
    Rng rng(derive_seed(config.seed, {0x72616e73ULL}));
    for (int it = 0; it < config.iterations; ++it) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 1));
      auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(n) - 2));
      if (j >= i) ++j;
      samples.emplace_back(i, j);
    }
  }

  std::size_t best_count = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<bool> best(n, false);
  for (const auto& [i, j] : samples) {
    if ((pred[i] - pred[j]).norm() < 1e-12) continue;
    const std::array<Vec2, 2> src{pred[i], pred[j]};
    const std::array<Vec2, 2> dst{gt[i], gt[j]};
    const RigidTransform2 t = fit_rigid(src, dst);
    std::size_t count = 0;
    double cost = 0.0;
    std::vector<bool> inl(n, false);
    for (std::size_t k = 0; k < n; ++k) {
      const double r = (t.apply(pred[k]) - gt[k]).norm();
      if (r < config.inlier_threshold) {
        inl[k] = true;
        ++count;
        cost += r;
      }
    }
    if (count > best_count || (count == best_count && cost < best_cost)) {
      best_count = count;
      best_cost = cost;
      best = std::move(inl);
    }
  }

  if (best_count < 2) {
    result.warnings.push_back("no consensus; aligning with all poses");
    best.assign(n, true);
  }
  std::vector<Vec2> src, dst;
  for (std::size_t k = 0; k < n; ++k) {
    if (!best[k]) continue;
    src.push_back(pred[k]);
    dst.push_back(gt[k]);
  }
  result.transform = fit_rigid(src, dst);
  result.inliers = std::move(best);
  return result;
}

PoseErrors pose_errors(std::span<const CameraPose> pred, std::span<const CameraPose> gt,
                       const RigidTransform2& transform, double raw_scale) {
  if (pred.size() != gt.size()) fail(ErrorCode::kInvalidArgument, "camera counts differ");
  PoseErrors out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].id != gt[i].id) fail(ErrorCode::kInvalidArgument, "camera ids differ");
    const double d = (transform.apply(pred[i].position) - gt[i].position).norm();
    out.translation_pct.push_back(100.0 * d / kNormalizedExtent);
    out.translation_raw.push_back(d / raw_scale);
    out.rotation_deg.push_back(std::abs(wrap_angle(pred[i].rotation - gt[i].rotation)) *
                               180.0 / kPi);
  }
  return out;
}

std::vector<bool> visible_walls(const Scene& scene,
                                std::span<const ColumnAssignment> assignments) {
  std::vector<bool> visible(scene.wall_count(), false);
  for (const auto& a : assignments) {
    for (int gid : a.walls) {
      if (gid != kUnassigned && static_cast<std::size_t>(gid) < visible.size()) {
        visible[gid] = true;
      }
    }
  }
  return visible;
}

LayoutErrors layout_errors(const Scene& pred, const Scene& gt, const std::vector<bool>& visible,
                           const RigidTransform2& transform) {
  if (pred.rooms.size() != gt.rooms.size()) fail(ErrorCode::kValidation, "room counts differ");
  for (std::size_t r = 0; r < gt.rooms.size(); ++r) {
    if (pred.rooms[r].walls.size() != gt.rooms[r].walls.size()) {
      fail(ErrorCode::kValidation, "room " + std::to_string(gt.rooms[r].id) +
                                       " topology differs");
    }
  }
  if (visible.size() != gt.wall_count()) {
    fail(ErrorCode::kInvalidArgument, "visibility does not cover every wall");
  }
  LayoutErrors out;
  int gid = 0;
  for (std::size_t r = 0; r < gt.rooms.size(); ++r) {
    const RoomPolygon& pr = pred.rooms[r];
    const RoomPolygon& gr = gt.rooms[r];
    const std::size_t k = gr.walls.size();
    std::vector<bool> vertex_used(k, false);
    for (std::size_t e = 0; e < k; ++e, ++gid) {
      if (!visible[gid]) continue;
      vertex_used[e] = vertex_used[(e + 1) % k] = true;
      const Wall& pw = pr.walls[e];
      const Vec2 normal = rotate(pw.normal, transform.angle);
      const Vec2 on_line = transform.apply(pw.offset * pw.normal);
      const Vec2 mid = 0.5 * (gr.vertices[e] + gr.vertices[(e + 1) % k]);
      const double dist = std::abs(normal.dot(mid) - normal.dot(on_line));
      out.wall_pct.push_back(100.0 * dist / kNormalizedExtent);
    }
    for (std::size_t v = 0; v < k; ++v) {
      if (!vertex_used[v]) continue;
      const double d = (transform.apply(pr.vertices[v]) - gr.vertices[v]).norm();
      out.vertex_pct.push_back(100.0 * d / kNormalizedExtent);
    }
  }
  return out;
}

std::vector<double> reprojection_errors(const Scene& scene,
                                        std::span<const BoundaryObservation> boundaries,
                                        std::span<const ColumnAssignment> assignments,
                                        const ImageGeometry& geom) {
  if (boundaries.size() != scene.cameras.size() || assignments.size() != scene.cameras.size()) {
    fail(ErrorCode::kInvalidArgument, "need one boundary and assignment per camera");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const auto& rows = boundaries[i].rows;
    const auto& walls = assignments[i].walls;
    for (int c = 0; c < geom.width() && c < static_cast<int>(rows.size()); ++c) {
      if (walls[c] == kUnassigned || !rows[c]) continue;
      const auto eps = column_residual(scene.wall(walls[c]), scene.cameras[i], *rows[c], c, geom);
      if (eps) out.push_back(std::abs(*eps));
    }
  }
  return out;
}

std::vector<ValidityMask> scene_validity_masks(const Scene& scene) {
  std::vector<ValidityMask> masks;
  for (const auto& room : scene.rooms) {
    std::vector<Vec2> dirs;
    for (const auto& w : room.walls) dirs.push_back(w.direction);
    masks.push_back(build_validity_mask(dirs));
  }
  return masks;
}

double masked_l2_metric(const Scene& pred, const Scene& gt,
                        std::span<const ValidityMask> masks) {
  if (pred.rooms.size() != gt.rooms.size() || masks.size() != gt.rooms.size() ||
      pred.cameras.size() != gt.cameras.size()) {
    fail(ErrorCode::kValidation, "scene topologies differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.cameras.size(); ++i) {
    sum += (pred.cameras[i].position - gt.cameras[i].position).squaredNorm();
  }
  for (std::size_t r = 0; r < gt.rooms.size(); ++r) {
    const auto& pv = pred.rooms[r].vertices;
    const auto& gv = gt.rooms[r].vertices;
    if (pv.size() != gv.size() || masks[r].size() != gv.size()) {
      fail(ErrorCode::kValidation, "room vertex counts differ");
    }
    for (std::size_t v = 0; v < gv.size(); ++v) {
      for (int a = 0; a < 2; ++a) {
        if (!masks[r][v][a]) continue;
        const double d = pv[v][a] - gv[v][a];
        sum += d * d;
      }
    }
  }
  return std::sqrt(sum);
}

double combined_objective(double masked_l2, double mean_reproj_px, int rows) {
  return masked_l2 + 100.0 * mean_reproj_px / rows;
}

FloorMetrics evaluate_floor(const Scene& pred, const Scene& gt,
                            std::span<const BoundaryObservation> boundaries,
                            std::span<const ColumnAssignment> assignments,
                            const ImageGeometry& geom, const RansacConfig& ransac) {
  if (pred.cameras.size() != gt.cameras.size()) {
    fail(ErrorCode::kValidation, "camera counts differ");
  }
  FloorMetrics m;
  m.wall_count = gt.wall_count();
  m.camera_count = gt.cameras.size();
  std::vector<Vec2> pp, gp;
  for (std::size_t i = 0; i < gt.cameras.size(); ++i) {
    pp.push_back(pred.cameras[i].position);
    gp.push_back(gt.cameras[i].position);
  }
  const Alignment align = ransac_align(pp, gp, ransac);
  m.warnings = align.warnings;
  const double raw_scale = gt.norm_transform ? gt.norm_transform->scale : 1.0;
  m.pose = pose_errors(pred.cameras, gt.cameras, align.transform, raw_scale);
  m.layout = layout_errors(pred, gt, visible_walls(gt, assignments), align.transform);
  m.reprojection_px = reprojection_errors(pred, boundaries, assignments, geom);
  m.masked_l2 = masked_l2_metric(pred, gt, scene_validity_masks(gt));
  m.objective = combined_objective(m.masked_l2, compute_stats(m.reprojection_px).mean,
                                   geom.height());
  return m;
}

namespace {

struct MetricDef {
  const char* name;
  const char* unit;
  const std::vector<double>& (*values)(const FloorMetrics&);
};

const MetricDef kMetrics[] = {
    {"pose_translation", "pct_extent",
     [](const FloorMetrics& m) -> const std::vector<double>& { return m.pose.translation_pct; }},
    {"pose_translation_raw", "raw_units",
     [](const FloorMetrics& m) -> const std::vector<double>& { return m.pose.translation_raw; }},
    {"pose_rotation", "deg",
     [](const FloorMetrics& m) -> const std::vector<double>& { return m.pose.rotation_deg; }},
    {"layout_wall", "pct_extent",
     [](const FloorMetrics& m) -> const std::vector<double>& { return m.layout.wall_pct; }},
    {"layout_vertex", "pct_extent",
     [](const FloorMetrics& m) -> const std::vector<double>& { return m.layout.vertex_pct; }},
    {"reprojection", "px",
     [](const FloorMetrics& m) -> const std::vector<double>& { return m.reprojection_px; }},
};

const MetricDef& metric_def(const std::string& name) {
  for (const auto& d : kMetrics) {
    if (name == d.name) return d;
  }
  fail(ErrorCode::kInvalidArgument, "unknown metric " + name);
}

void write_stats_row(std::ostringstream& os, const std::string& floor, const MetricDef& d,
                     const ErrorStats& s) {
  os << floor << ',' << d.name << ',' << d.unit << ',' << format_double(s.mean) << ','
     << format_double(s.median) << ',' << format_double(s.std) << ','
     << format_double(s.p90) << '\n';
}

nlohmann::ordered_json stats_json(const ErrorStats& s) {
  return {{"mn", s.mean}, {"med", s.median}, {"std", s.std}, {"p90", s.p90}, {"count", s.count}};
}

bool parse_integer(const std::string& s, long long& out) {
  if (s.empty() || s.size() > 18) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  out = std::stoll(s);
  return true;
}

}  // namespace

bool MetricsSuite::FloorOrder::operator()(const std::string& a, const std::string& b) const {
  long long ia = 0, ib = 0;
  const bool na = parse_integer(a, ia);
  const bool nb = parse_integer(b, ib);
  if (na && nb) return ia != ib ? ia < ib : a < b;
  if (na != nb) return na;
  return a < b;
}

void MetricsSuite::add(const std::string& floor, FloorMetrics metrics) {
  std::lock_guard lock(mutex_);
  floors_[floor] = std::move(metrics);
}

void MetricsSuite::add_error(const std::string& floor, const std::string& message) {
  std::lock_guard lock(mutex_);
  errors_[floor] = message;
}

std::size_t MetricsSuite::floor_count() const {
  std::lock_guard lock(mutex_);
  return floors_.size();
}

std::vector<std::pair<std::string, std::string>> MetricsSuite::errors() const {
  std::lock_guard lock(mutex_);
  return {errors_.begin(), errors_.end()};
}

std::vector<double> MetricsSuite::pooled_values(const std::string& metric) const {
  const MetricDef& d = metric_def(metric);
  std::vector<double> all;
  for (const auto& [name, m] : floors_) {
    const auto& v = d.values(m);
    all.insert(all.end(), v.begin(), v.end());
  }
  return all;
}

ErrorStats MetricsSuite::pooled(const std::string& metric) const {
  std::lock_guard lock(mutex_);
  return compute_stats(pooled_values(metric));
}

std::string MetricsSuite::csv() const {
  std::lock_guard lock(mutex_);
  std::ostringstream os;
  os << "floor,metric,unit,mean,median,std,p90\n";
  for (const auto& [name, m] : floors_) {
    for (const auto& d : kMetrics) write_stats_row(os, name, d, compute_stats(d.values(m)));
  }
  for (const auto& d : kMetrics) write_stats_row(os, "all", d, compute_stats(pooled_values(d.name)));
  return os.str();
}

nlohmann::ordered_json MetricsSuite::summary_row(const std::string& label) const {
  std::lock_guard lock(mutex_);
  double walls = 0.0, panos = 0.0;
  for (const auto& [name, m] : floors_) {
    walls += static_cast<double>(m.wall_count);
    panos += static_cast<double>(m.camera_count);
  }
  const double n = floors_.empty() ? 1.0 : static_cast<double>(floors_.size());
  nlohmann::ordered_json row;
  row["state"] = label;
  row["floors"] = floors_.size();
  row["pose_err_pct"] = stats_json(compute_stats(pooled_values("pose_translation")));
  row["visible_layout_err_pct"] = stats_json(compute_stats(pooled_values("layout_wall")));
  row["visible_vertex_err_pct"] = stats_json(compute_stats(pooled_values("layout_vertex")));
  row["rotation_err_deg"] = stats_json(compute_stats(pooled_values("pose_rotation")));
  row["reprojection_px"] = stats_json(compute_stats(pooled_values("reprojection")));
  row["walls_per_floor"] = walls / n;
  row["panos_per_floor"] = panos / n;
  return row;
}

}  // namespace planar_ba
