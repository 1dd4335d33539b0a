#pragma once

#include <string>

#include "planar_ba/renderer.hpp"
#include "planar_ba/scene.hpp"

namespace planar_ba {

/// Top-down before / after / ground-truth panels side by side.
std::string layout_triptych_svg(const Scene& before, const Scene& after, const Scene& gt);

/// Observed floor boundary against the boundary re-projected from `scene`
/// for one camera, drawn in image coordinates.
std::string camera_overlay_svg(const Scene& scene, std::size_t camera_index,
                               const BoundaryObservation& observed,
                               const ColumnAssignment& assignment,
                               const ImageGeometry& geom);

}  // namespace planar_ba
