#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "planar_ba/scene.hpp"

namespace planar_ba {

inline constexpr const char* kSceneFormat = "planar-ba/1";

nlohmann::ordered_json scene_to_json(const Scene& scene);
/// Accepts the canonical schema. A missing "format" key is tolerated so that
/// bare room-polygon lists can be ingested; a mismatching one is rejected.
Scene scene_from_json(const nlohmann::json& j);

nlohmann::ordered_json boundary_to_json(const BoundaryObservation& boundary,
                                        const ColumnAssignment& assignment);
void boundary_from_json(const nlohmann::json& j, BoundaryObservation& boundary,
                        ColumnAssignment& assignment);

std::string dump_json(const nlohmann::ordered_json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace planar_ba
