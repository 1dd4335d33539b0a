#include "planar_ba/layout.hpp"

#include <cmath>

#include "planar_ba/error.hpp"

namespace planar_ba {

namespace {

constexpr double kAxisEpsilon = 1e-12;

std::size_t dominant_axis(const Vec2& d) {
  return std::abs(d.x()) >= std::abs(d.y()) ? 0 : 1;
}

// Next vertex on the line through `from` with direction `d`, keeping the
// coordinate `axis` of `target`.
Vec2 step_along(const Vec2& from, const Vec2& d, const Vec2& target, std::size_t axis) {
  if (std::abs(d[axis]) < kAxisEpsilon) axis = 1 - axis;
  const double t = (target[axis] - from[axis]) / d[axis];
  Vec2 next;
  next[axis] = target[axis];
  next[1 - axis] = from[1 - axis] + t * d[1 - axis];
  return next;
}

void check_directions(std::span<const Vec2> directions) {
  for (const auto& d : directions) {
    if (!(d.norm() > kAxisEpsilon)) fail(ErrorCode::kInvalidArgument, "zero wall direction");
  }
}

std::size_t valid_axis(const std::array<bool, 2>& flags) { return flags[0] ? 0 : 1; }

}  // namespace

ValidityMask build_validity_mask(std::span<const Vec2> directions) {
  const std::size_t k = directions.size();
  ValidityMask mask(k);
  for (std::size_t v = 0; v < k; ++v) {
    const std::size_t axis = dominant_axis(directions[(v + k - 1) % k]);
    mask[v] = {axis == 0, axis == 1};
  }
  return mask;
}

std::vector<Vec2> ldr_propagate(std::span<const Vec2> predicted,
                                std::span<const Vec2> directions,
                                const ValidityMask& mask, std::size_t start) {
  const std::size_t k = predicted.size();
  if (k < 3 || directions.size() != k || mask.size() != k || start >= k) {
    fail(ErrorCode::kInvalidArgument, "inconsistent LDR inputs");
  }
  check_directions(directions);
  std::vector<Vec2> out(predicted.begin(), predicted.end());
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const std::size_t cur = (start + j) % k;
    const std::size_t next = (cur + 1) % k;
    out[next] = step_along(out[cur], directions[cur], predicted[next], valid_axis(mask[next]));
  }
  return out;
}

double closure_residual(std::span<const Vec2> vertices, std::span<const Vec2> directions) {
  const std::size_t k = vertices.size();
  if (k < 3 || directions.size() != k) {
    fail(ErrorCode::kInvalidArgument, "closure needs at least 3 matching vertices");
  }
  check_directions(directions);
  const ValidityMask mask = build_validity_mask(directions);
  Vec2 walk = vertices[0];
  for (std::size_t cur = 0; cur < k; ++cur) {
    const std::size_t next = (cur + 1) % k;
    walk = step_along(walk, directions[cur], vertices[next], valid_axis(mask[next]));
  }
  return (walk - vertices[0]).norm();
}

}  // namespace planar_ba
