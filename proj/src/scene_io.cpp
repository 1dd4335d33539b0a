#include "planar_ba/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "planar_ba/error.hpp"

namespace planar_ba {

namespace {

using ojson = nlohmann::ordered_json;

ojson vec_json(const Vec2& v) { return ojson::array({v.x(), v.y()}); }

Vec2 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    fail(ErrorCode::kValidation, "expected [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Vec2> json_loop(const nlohmann::json& j) {
  std::vector<Vec2> out;
  for (const auto& v : j) out.push_back(json_vec(v));
  return out;
}

}  // namespace

ojson scene_to_json(const Scene& scene) {
  ojson j;
  j["format"] = kSceneFormat;
  ojson rooms = ojson::array();
  for (const auto& room : scene.rooms) {
    ojson r;
    r["id"] = room.id;
    r["room_type"] = room.room_type;
    ojson verts = ojson::array();
    for (const auto& v : room.vertices) verts.push_back(vec_json(v));
    r["vertices"] = std::move(verts);
    rooms.push_back(std::move(r));
  }
  j["rooms"] = std::move(rooms);
  if (!scene.doors.empty()) {
    ojson doors = ojson::array();
    for (const auto& door : scene.doors) {
      ojson verts = ojson::array();
      for (const auto& v : door.vertices) verts.push_back(vec_json(v));
      doors.push_back({{"id", door.id}, {"vertices", std::move(verts)}});
    }
    j["doors"] = std::move(doors);
  }
  ojson cams = ojson::array();
  for (const auto& cam : scene.cameras) {
    ojson c;
    c["id"] = cam.id;
    c["position"] = vec_json(cam.position);
    c["rotation_rad"] = cam.rotation;
    c["height"] = cam.height;
    cams.push_back(std::move(c));
  }
  j["cameras"] = std::move(cams);
  if (scene.norm_transform) {
    j["norm_transform"] = {{"scale", scene.norm_transform->scale},
                           {"translate", vec_json(scene.norm_transform->translate)}};
  }
  return j;
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("format") && j["format"].get<std::string>() != kSceneFormat) {
      fail(ErrorCode::kValidation,
           "unsupported scene format '" + j["format"].get<std::string>() + "'");
    }
    Scene scene;
    int next_id = 0;
    for (const auto& r : j.at("rooms")) {
      const int id = r.contains("id") ? r["id"].get<int>() : next_id;
      next_id = id + 1;
      scene.rooms.push_back(make_room(id, r.value("room_type", std::string{}),
                                      json_loop(r.at("vertices"))));
    }
    if (j.contains("doors")) {
      for (const auto& d : j["doors"]) {
        scene.doors.push_back({d.value("id", 0), json_loop(d.at("vertices"))});
      }
    }
    if (j.contains("cameras")) {
      for (const auto& c : j["cameras"]) {
        CameraPose cam;
        cam.id = c.at("id").get<int>();
        cam.position = json_vec(c.at("position"));
        cam.rotation = c.value("rotation_rad", 0.0);
        cam.height = c.value("height", 0.35);
        scene.cameras.push_back(cam);
      }
    }
    if (j.contains("norm_transform")) {
      const auto& t = j["norm_transform"];
      scene.norm_transform =
          NormTransform{t.at("scale").get<double>(), json_vec(t.at("translate"))};
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kValidation, std::string("malformed scene JSON: ") + e.what());
  }
}

ojson boundary_to_json(const BoundaryObservation& boundary,
                       const ColumnAssignment& assignment) {
  ojson j;
  j["camera_id"] = boundary.camera_id;
  ojson rows = ojson::array();
  for (const auto& r : boundary.rows) {
    if (r) {
      rows.push_back(*r);
    } else {
      rows.push_back(nullptr);
    }
  }
  j["rows"] = std::move(rows);
  j["walls"] = assignment.walls;
  return j;
}

void boundary_from_json(const nlohmann::json& j, BoundaryObservation& boundary,
                        ColumnAssignment& assignment) {
  try {
    boundary.camera_id = j.at("camera_id").get<int>();
    assignment.camera_id = boundary.camera_id;
    boundary.rows.clear();
    for (const auto& r : j.at("rows")) {
      if (r.is_null()) {
        boundary.rows.emplace_back(std::nullopt);
      } else {
        boundary.rows.emplace_back(r.get<double>());
      }
    }
    assignment.walls = j.at("walls").get<std::vector<int>>();
    if (assignment.walls.size() != boundary.rows.size()) {
      fail(ErrorCode::kValidation, "rows and walls lengths differ");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kValidation, std::string("malformed boundary JSON: ") + e.what());
  }
}

std::string dump_json(const ojson& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace planar_ba
