#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "planar_ba/geometry.hpp"

namespace planar_ba {

/// Per vertex: {x_valid, y_valid}. Exactly one flag is set per vertex.
using ValidityMask = std::vector<std::array<bool, 2>>;

/// The free coordinate of vertex k is the dominant axis of the incoming wall
/// direction k-1 (ties pick x).
ValidityMask build_validity_mask(std::span<const Vec2> directions);

/// Walks the loop from `start`, keeping each vertex's valid coordinate and
/// solving the other one from the previous vertex and wall direction. The
/// closing edge back to `start` is not enforced; see closure_residual.
std::vector<Vec2> ldr_propagate(std::span<const Vec2> predicted,
                                std::span<const Vec2> directions,
                                const ValidityMask& mask, std::size_t start = 0);

/// Distance between v_0 and the vertex reached by walking the full loop
/// (including the closing edge) from v_0.
double closure_residual(std::span<const Vec2> vertices, std::span<const Vec2> directions);

}  // namespace planar_ba
