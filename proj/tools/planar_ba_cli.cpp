#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "planar_ba/planar_ba.h"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct CliError : std::runtime_error {
  CliError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

int exit_code_for(pba_status s) { return s == PBA_ERR_IO ? kExitIo : kExitValidation; }

void check(pba_status s, const std::string& context) {
  if (s != PBA_OK) throw CliError(exit_code_for(s), context + ": " + pba_last_error());
}

// Logging

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level log_level() {
  static const Level level = [] {
    const char* env = std::getenv("PLANAR_BA_LOG");
    const std::string v = env ? env : "warn";
    if (v == "error") return Level::kError;
    if (v == "info") return Level::kInfo;
    if (v == "debug") return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

std::mutex g_log_mutex;

void log(Level level, const std::string& msg) {
  if (level > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

// Handles

struct SceneDeleter {
  void operator()(pba_scene* s) const { pba_scene_free(s); }
};
struct ObsDeleter {
  void operator()(pba_observations* o) const { pba_observations_free(o); }
};
struct MetricsDeleter {
  void operator()(pba_metrics* m) const { pba_metrics_free(m); }
};
using ScenePtr = std::unique_ptr<pba_scene, SceneDeleter>;
using ObsPtr = std::unique_ptr<pba_observations, ObsDeleter>;
using MetricsPtr = std::unique_ptr<pba_metrics, MetricsDeleter>;

class CString {
 public:
  CString() = default;
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  ~CString() { pba_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

// Files

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kExitIo, "cannot write " + path.string());
  out << text;
  if (!out) throw CliError(kExitIo, "cannot write " + path.string());
}

ScenePtr load_scene(const fs::path& path) {
  if (!fs::exists(path)) throw CliError(kExitIo, "missing " + path.string());
  pba_scene* s = nullptr;
  check(pba_scene_load(path.string().c_str(), &s), path.string());
  return ScenePtr(s);
}

void save_scene(const pba_scene* scene, const fs::path& path) {
  check(pba_scene_save(scene, path.string().c_str()), path.string());
}

ScenePtr clone_scene(const pba_scene* scene) {
  pba_scene* s = nullptr;
  check(pba_scene_clone(scene, &s), "clone");
  return ScenePtr(s);
}

bool is_number(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool numeric_less(const std::string& a, const std::string& b) {
  const bool na = is_number(a), nb = is_number(b);
  if (na && nb) return a.size() != b.size() ? a.size() < b.size() : a < b;
  if (na != nb) return na;
  return a < b;
}

ObsPtr load_boundaries(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CliError(kExitIo, "missing " + dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      names.push_back(e.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end(), numeric_less);
  if (names.empty()) throw CliError(kExitValidation, "no boundaries in " + dir.string());
  std::vector<std::string> texts;
  for (const auto& n : names) texts.push_back(read_file(dir / (n + ".json")));
  int width = 0;
  try {
    width = static_cast<int>(nlohmann::json::parse(texts.front()).at("rows").size());
  } catch (const nlohmann::json::exception& e) {
    throw CliError(kExitValidation, dir.string() + ": " + e.what());
  }
  pba_observations* o = nullptr;
  check(pba_observations_create(width, &o), dir.string());
  ObsPtr obs(o);
  for (std::size_t i = 0; i < names.size(); ++i) {
    check(pba_observations_add_json(obs.get(), texts[i].c_str()),
          (dir / (names[i] + ".json")).string());
  }
  return obs;
}

void save_boundaries(const pba_observations* obs, const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) throw CliError(kExitIo, "cannot create " + dir.string());
  for (std::size_t i = 0; i < pba_observations_count(obs); ++i) {
    CString json;
    check(pba_observations_camera_json(obs, i, json.out()), "boundary");
    write_file(dir / (std::to_string(pba_observations_camera_id(obs, i)) + ".json"), json.str());
  }
}

std::vector<std::string> list_floors(const fs::path& dataset) {
  const fs::path root = dataset / "floors";
  if (!fs::is_directory(root)) throw CliError(kExitIo, "no floors directory in " + dataset.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end(), numeric_less);
  return names;
}

std::uint64_t floor_seed_of(const std::string& name, std::uint64_t fallback) {
  if (is_number(name) && name.size() <= 19) return std::stoull(name);
  std::uint64_t h = fallback ^ 0xcbf29ce484222325ULL;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

/// Per-command stream seed for a floor.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t floor) {
  return master * 0x9e3779b97f4a7c15ULL + floor;
}

bool dataset_has_boundary_noise(const fs::path& dataset) {
  const fs::path path = dataset / "manifest.json";
  if (!fs::exists(path)) return false;
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    return j.value("boundary_noise", false);
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

// Parallel floor loop

struct FloorFailure {
  std::string floor;
  int code;
  std::string message;
};

template <typename F>
std::vector<FloorFailure> for_each_floor(const std::vector<std::string>& floors, int jobs, F fn) {
  std::vector<FloorFailure> failures;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < floors.size(); i = next++) {
      try {
        fn(floors[i]);
        log(Level::kInfo, "floor " + floors[i] + " done");
      } catch (const CliError& e) {
        std::lock_guard lock(mutex);
        failures.push_back({floors[i], e.code, e.what()});
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        failures.push_back({floors[i], kExitValidation, e.what()});
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(floors.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  std::sort(failures.begin(), failures.end(),
            [](const FloorFailure& a, const FloorFailure& b) { return numeric_less(a.floor, b.floor); });
  return failures;
}

int report_failures(const std::vector<FloorFailure>& failures) {
  int code = kExitOk;
  for (const auto& f : failures) {
    log(Level::kError, "floor " + f.floor + ": " + f.message);
    code = std::max(code, f.code);
  }
  return code;
}

// Manifest

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string config;
};

class Manifest {
 public:
  Manifest(std::string command, const Globals& g) : start_(std::chrono::steady_clock::now()) {
    j_["tool"] = "planar-ba";
    j_["version"] = pba_version();
    j_["command"] = std::move(command);
    j_["seeds"] = {{"master", g.seed}};
    j_["jobs"] = g.jobs;
    if (!g.config.empty()) j_["config_file"] = g.config;
  }
  ojson& config() { return j_["config"]; }
  ojson& root() { return j_; }
  void input(const std::string& key, const std::string& path) { j_["inputs"][key] = path; }
  void output(const std::string& key, const std::string& path) { j_["outputs"][key] = path; }
  void write(const fs::path& dir) {
    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j_["timings"] = {{"total_s", total}};
    write_file(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  std::chrono::steady_clock::time_point start_;
  ojson j_;
};

// gen

struct GenOptions {
  std::string out;
  int floors = 1;
  double imgs_per_room = 1.0;
  int width = 512;
  double sigma = 0.0;
  double boundary_chance = 0.0;
  double boundary_max_scale = 0.02;
  int min_rooms = 4;
  int max_rooms = 8;
  double extent = 10.0;
  double min_room_size = 1.5;
  double notch_probability = 0.3;
  double camera_height = 0.35;
  std::string rooms;
};

ObsPtr render_observations(const pba_scene* gt, int width, double chance, double max_scale,
                           std::uint64_t seed) {
  pba_observations* o = nullptr;
  if (chance > 0.0) {
    const pba_boundary_noise noise{chance, max_scale, seed};
    check(pba_render(gt, width, &noise, &o), "render");
  } else {
    check(pba_render(gt, width, nullptr, &o), "render");
  }
  return ObsPtr(o);
}

int cmd_gen(const GenOptions& opt, const Globals& g) {
  if (opt.floors < 1) throw CliError(kExitValidation, "--floors must be positive");
  if (!opt.rooms.empty() && opt.floors != 1) {
    throw CliError(kExitValidation, "--rooms ingests a single floor; use --floors 1");
  }
  const fs::path out(opt.out);
  Manifest manifest("gen", g);
  auto& c = manifest.config();
  c["floors"] = opt.floors;
  c["imgs_per_room"] = opt.imgs_per_room;
  c["width"] = opt.width;
  c["sigma"] = opt.sigma;
  c["boundary_chance"] = opt.boundary_chance;
  c["boundary_max_scale"] = opt.boundary_max_scale;
  c["min_rooms"] = opt.min_rooms;
  c["max_rooms"] = opt.max_rooms;
  c["extent"] = opt.extent;
  c["min_room_size"] = opt.min_room_size;
  c["notch_probability"] = opt.notch_probability;
  c["camera_height"] = opt.camera_height;
  if (!opt.rooms.empty()) manifest.input("rooms", opt.rooms);
  manifest.root()["boundary_noise"] = opt.boundary_chance > 0.0;

  std::vector<std::string> floors;
  ojson seeds = ojson::array();
  for (int i = 0; i < opt.floors; ++i) {
    floors.push_back(std::to_string(g.seed + static_cast<std::uint64_t>(i)));
    seeds.push_back(g.seed + static_cast<std::uint64_t>(i));
  }
  manifest.root()["seeds"]["floors"] = seeds;

  pba_floorplan_config fc = pba_floorplan_config_default();
  fc.min_rooms = opt.min_rooms;
  fc.max_rooms = opt.max_rooms;
  fc.extent = opt.extent;
  fc.min_room_size = opt.min_room_size;
  fc.notch_probability = opt.notch_probability;
  pba_camera_config cc = pba_camera_config_default();
  cc.height = opt.camera_height;

  const auto failures = for_each_floor(floors, g.jobs, [&](const std::string& name) {
    const std::uint64_t fseed = std::stoull(name);
    ScenePtr gt;
    if (opt.rooms.empty()) {
      pba_scene* s = nullptr;
      check(pba_generate_floorplan(fseed, &fc, &s), "generate");
      gt.reset(s);
    } else {
      ScenePtr raw = load_scene(opt.rooms);
      if (pba_scene_is_normalized(raw.get())) {
        gt = std::move(raw);
      } else {
        pba_scene* s = nullptr;
        check(pba_scene_normalize(raw.get(), &s), "normalize");
        gt.reset(s);
      }
    }
    if (pba_scene_camera_count(gt.get()) == 0) {
      check(pba_sample_cameras(gt.get(), opt.imgs_per_room, fseed, &cc), "sample cameras");
    }
    CString report;
    check(pba_scene_validate(gt.get(), report.out()), "floor " + name);
    ObsPtr obs = render_observations(gt.get(), opt.width, opt.boundary_chance,
                                     opt.boundary_max_scale, fseed);
    ScenePtr start;
    if (opt.sigma > 0.0) {
      pba_scene* s = nullptr;
      check(pba_perturb_scene(gt.get(), opt.sigma, fseed, &s), "perturb");
      start.reset(s);
    } else {
      start = clone_scene(gt.get());
    }
    const fs::path dir = out / "floors" / name;
    save_scene(gt.get(), dir / "gt.json");
    save_scene(start.get(), dir / "scene.json");
    save_boundaries(obs.get(), dir / "boundaries");
  });
  manifest.output("dataset", opt.out);
  manifest.write(out);
  return report_failures(failures);
}

// perturb

struct PerturbOptions {
  std::string in;
  std::string out;
  double sigma = 0.033;
  double boundary_chance = 0.0;
  double boundary_max_scale = 0.02;
};

int cmd_perturb(const PerturbOptions& opt, const Globals& g) {
  const fs::path in(opt.in), out(opt.out);
  if (fs::weakly_canonical(in) == fs::weakly_canonical(out)) {
    throw CliError(kExitValidation, "perturb needs a separate output directory");
  }
  const auto floors = list_floors(in);
  Manifest manifest("perturb", g);
  manifest.config() = {{"sigma", opt.sigma},
                       {"boundary_chance", opt.boundary_chance},
                       {"boundary_max_scale", opt.boundary_max_scale}};
  const bool noisy = opt.boundary_chance > 0.0 || dataset_has_boundary_noise(in);
  manifest.root()["boundary_noise"] = noisy;
  manifest.input("dataset", opt.in);

  const auto failures = for_each_floor(floors, g.jobs, [&](const std::string& name) {
    const fs::path src = in / "floors" / name, dst = out / "floors" / name;
    const std::uint64_t stream = mix_seed(g.seed, floor_seed_of(name, g.seed));
    ScenePtr gt = load_scene(src / "gt.json");
    pba_scene* s = nullptr;
    check(pba_perturb_scene(gt.get(), opt.sigma, stream, &s), "perturb");
    ScenePtr start(s);
    ObsPtr obs = load_boundaries(src / "boundaries");
    if (opt.boundary_chance > 0.0) {
      obs = render_observations(gt.get(), pba_observations_width(obs.get()), opt.boundary_chance,
                                opt.boundary_max_scale, stream);
    }
    save_scene(gt.get(), dst / "gt.json");
    save_scene(start.get(), dst / "scene.json");
    save_boundaries(obs.get(), dst / "boundaries");
  });
  manifest.output("dataset", opt.out);
  manifest.write(out);
  return report_failures(failures);
}

// render

struct RenderOptions {
  std::string in;
  std::string out;
  int width = 512;
  double boundary_chance = 0.0;
  double boundary_max_scale = 0.02;
};

int cmd_render(const RenderOptions& opt, const Globals& g) {
  const fs::path in(opt.in);
  const fs::path out(opt.out.empty() ? opt.in : opt.out);
  const bool in_place = fs::weakly_canonical(in) == fs::weakly_canonical(out);
  const auto floors = list_floors(in);
  Manifest manifest("render", g);
  manifest.config() = {{"width", opt.width},
                       {"boundary_chance", opt.boundary_chance},
                       {"boundary_max_scale", opt.boundary_max_scale}};
  manifest.root()["boundary_noise"] = opt.boundary_chance > 0.0;
  manifest.input("dataset", opt.in);

  const auto failures = for_each_floor(floors, g.jobs, [&](const std::string& name) {
    const fs::path src = in / "floors" / name, dst = out / "floors" / name;
    ScenePtr gt = load_scene(src / "gt.json");
    ObsPtr obs = render_observations(gt.get(), opt.width, opt.boundary_chance,
                                     opt.boundary_max_scale,
                                     mix_seed(g.seed, floor_seed_of(name, g.seed)));
    if (!in_place) {
      save_scene(gt.get(), dst / "gt.json");
      const fs::path start = src / "scene.json";
      save_scene(fs::exists(start) ? load_scene(start).get() : gt.get(), dst / "scene.json");
    }
    save_boundaries(obs.get(), dst / "boundaries");
  });
  manifest.output("dataset", out.string());
  manifest.write(out);
  return report_failures(failures);
}

// optimize

struct OptimizeOptions {
  std::string in;
  std::string out;
  pba_optimizer_config config = pba_optimizer_config_default();
  bool fix_walls = false;
  bool fix_cameras = false;
  std::string noisy = "auto";
};

int cmd_optimize(const OptimizeOptions& opt, const Globals& g) {
  const fs::path in(opt.in), out(opt.out);
  if (fs::weakly_canonical(in) == fs::weakly_canonical(out)) {
    throw CliError(kExitValidation, "optimize needs a separate output directory");
  }
  const auto floors = list_floors(in);
  pba_optimizer_config cfg = opt.config;
  cfg.fix_walls = opt.fix_walls ? 1 : 0;
  cfg.fix_cameras = opt.fix_cameras ? 1 : 0;
  const bool noisy = opt.noisy == "auto" ? dataset_has_boundary_noise(in) : opt.noisy == "yes";

  Manifest manifest("optimize", g);
  manifest.config() = {{"iterations", cfg.iterations},
                       {"step_scale", cfg.step_scale},
                       {"lm_damping", cfg.lm_damping},
                       {"convergence_tol", cfg.convergence_tol},
                       {"fix_walls", opt.fix_walls},
                       {"fix_cameras", opt.fix_cameras},
                       {"mask_probability", cfg.mask_probability},
                       {"huber_k", cfg.huber_k},
                       {"huber_delta_min", cfg.huber_delta_min},
                       {"noisy_boundaries", noisy}};
  manifest.root()["boundary_noise"] = noisy;
  manifest.input("dataset", opt.in);
  std::mutex summary_mutex;
  ojson per_floor = ojson::object();

  const auto failures = for_each_floor(floors, g.jobs, [&](const std::string& name) {
    const fs::path src = in / "floors" / name, dst = out / "floors" / name;
    ScenePtr start = load_scene(src / "scene.json");
    ObsPtr obs = load_boundaries(src / "boundaries");
    pba_optimizer_config fc = cfg;
    fc.mask_seed = mix_seed(g.seed, floor_seed_of(name, g.seed));
    pba_scene* s = nullptr;
    CString trace, warnings;
    int iterations = 0, converged = 0;
    check(pba_optimize(start.get(), obs.get(), &fc, noisy ? 1 : 0, &s, trace.out(),
                       warnings.out(), &iterations, &converged),
          "optimize");
    ScenePtr refined(s);
    const std::string w = warnings.str();
    if (!w.empty()) {
      std::istringstream lines(w);
      int count = 0;
      for (std::string line; std::getline(lines, line); ++count) {
        log(Level::kDebug, "floor " + name + ": " + line);
      }
      log(Level::kWarn, "floor " + name + ": " + std::to_string(count) +
                            " optimizer warnings, see warnings.txt");
    }
    save_scene(refined.get(), dst / "scene.json");
    save_scene(start.get(), dst / "start.json");
    if (fs::exists(src / "gt.json")) save_scene(load_scene(src / "gt.json").get(), dst / "gt.json");
    save_boundaries(obs.get(), dst / "boundaries");
    write_file(dst / "trace.csv", trace.str());
    write_file(dst / "warnings.txt", w);
    std::lock_guard lock(summary_mutex);
    per_floor[name] = {{"iterations_run", iterations}, {"converged", converged != 0}};
  });
  ojson sorted = ojson::object();
  std::vector<std::string> keys;
  for (const auto& [k, v] : per_floor.items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), numeric_less);
  for (const auto& k : keys) sorted[k] = per_floor[k];
  manifest.root()["floors"] = sorted;
  manifest.output("dataset", opt.out);
  manifest.write(out);
  return report_failures(failures);
}

// features

struct FeaturesOptions {
  std::string in;
  std::string out;
  std::string state = "scene";
  double lm_damping = 0.1;
};

int cmd_features(const FeaturesOptions& opt, const Globals& g) {
  const fs::path in(opt.in), out(opt.out);
  const auto floors = list_floors(in);
  Manifest manifest("features", g);
  manifest.config() = {{"state", opt.state}, {"lm_damping", opt.lm_damping}};
  manifest.input("dataset", opt.in);
  const auto failures = for_each_floor(floors, g.jobs, [&](const std::string& name) {
    const fs::path src = in / "floors" / name, dst = out / "floors" / name;
    ScenePtr scene = load_scene(src / (opt.state + ".json"));
    ObsPtr obs = load_boundaries(src / "boundaries");
    CString stats, field;
    check(pba_features(scene.get(), obs.get(), opt.lm_damping, stats.out(), field.out()),
          "features");
    write_file(dst / "stats.csv", stats.str());
    write_file(dst / "field.csv", field.str());
  });
  manifest.output("features", opt.out);
  manifest.write(out);
  return report_failures(failures);
}

// eval

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string out;
  std::string label = "BA-Only";
  bool with_start = false;
  pba_ransac_config ransac = pba_ransac_config_default();
};

int cmd_eval(const EvalOptions& opt, const Globals& g) {
  const fs::path pred(opt.pred), gt_root(opt.gt);
  const fs::path out(opt.out.empty() ? (pred / "eval").string() : opt.out);
  const auto floors = list_floors(gt_root);
  pba_metrics* m = nullptr;
  check(pba_metrics_create(&m), "metrics");
  MetricsPtr main_suite(m);
  MetricsPtr start_suite;
  if (opt.with_start) {
    check(pba_metrics_create(&m), "metrics");
    start_suite.reset(m);
  }

  Manifest manifest("eval", g);
  manifest.config() = {{"label", opt.label},
                       {"with_start", opt.with_start},
                       {"ransac_threshold", opt.ransac.inlier_threshold},
                       {"ransac_iterations", opt.ransac.iterations}};
  manifest.input("pred", opt.pred);
  manifest.input("gt", opt.gt);

  auto add = [&](pba_metrics* suite, const std::string& name, const fs::path& pred_path,
                 const pba_scene* gt, const pba_observations* obs) {
    if (!fs::exists(pred_path)) {
      check(pba_metrics_add_error(suite, name.c_str(),
                                  ("missing prediction " + pred_path.string()).c_str()),
            "metrics");
      return;
    }
    pba_ransac_config rc = opt.ransac;
    rc.seed = mix_seed(g.seed, floor_seed_of(name, g.seed));
    try {
      ScenePtr p = load_scene(pred_path);
      CString warnings;
      check(pba_metrics_add_floor(suite, name.c_str(), p.get(), gt, obs, &rc, warnings.out()),
            pred_path.string());
      if (!warnings.str().empty()) log(Level::kWarn, "floor " + name + ": " + warnings.str());
    } catch (const CliError& e) {
      check(pba_metrics_add_error(suite, name.c_str(), e.what()), "metrics");
    }
  };

  const auto failures = for_each_floor(floors, g.jobs, [&](const std::string& name) {
    const fs::path gdir = gt_root / "floors" / name, pdir = pred / "floors" / name;
    ScenePtr gt = load_scene(gdir / "gt.json");
    ObsPtr obs = load_boundaries(gdir / "boundaries");
    add(main_suite.get(), name, pdir / "scene.json", gt.get(), obs.get());
    if (start_suite) add(start_suite.get(), name, pdir / "start.json", gt.get(), obs.get());
  });

  CString csv, row, errors;
  check(pba_metrics_csv(main_suite.get(), csv.out()), "metrics");
  check(pba_metrics_summary_json(main_suite.get(), opt.label.c_str(), row.out()), "metrics");
  check(pba_metrics_errors_json(main_suite.get(), errors.out()), "metrics");
  ojson summary;
  summary["rows"] = ojson::array();
  ojson error_list = ojson::parse(errors.str());
  if (start_suite) {
    CString start_csv, start_row, start_errors;
    check(pba_metrics_csv(start_suite.get(), start_csv.out()), "metrics");
    check(pba_metrics_summary_json(start_suite.get(), "Start", start_row.out()), "metrics");
    check(pba_metrics_errors_json(start_suite.get(), start_errors.out()), "metrics");
    write_file(out / "metrics_start.csv", start_csv.str());
    summary["rows"].push_back(ojson::parse(start_row.str()));
    for (auto& e : ojson::parse(start_errors.str())) {
      e["state"] = "Start";
      error_list.push_back(e);
    }
    manifest.output("metrics_start", (out / "metrics_start.csv").string());
  }
  summary["rows"].push_back(ojson::parse(row.str()));
  for (const auto& f : failures) error_list.push_back({{"floor", f.floor}, {"error", f.message}});
  summary["errors"] = error_list;
  write_file(out / "metrics.csv", csv.str());
  write_file(out / "summary.json", summary.dump(2) + "\n");
  manifest.output("metrics", (out / "metrics.csv").string());
  manifest.output("summary", (out / "summary.json").string());
  manifest.write(out);

  int code = report_failures(failures);
  for (const auto& e : error_list) {
    if (e.contains("state")) continue;
    bool seen = false;
    for (const auto& f : failures) seen = seen || f.floor == e["floor"].get<std::string>();
    if (!seen) log(Level::kError, "floor " + e["floor"].get<std::string>() + ": " +
                                      e["error"].get<std::string>());
  }
  if (!error_list.empty()) code = std::max(code, kExitValidation);
  return code;
}

// report

struct ReportOptions {
  std::string floor;
  std::string out;
};

int cmd_report(const ReportOptions& opt, const Globals& g) {
  const fs::path floor(opt.floor);
  const fs::path out(opt.out.empty() ? (floor / "report").string() : opt.out);
  Manifest manifest("report", g);
  manifest.input("floor", opt.floor);
  ScenePtr after = load_scene(floor / "scene.json");
  ScenePtr before = fs::exists(floor / "start.json") ? load_scene(floor / "start.json")
                                                     : clone_scene(after.get());
  ScenePtr gt = fs::exists(floor / "gt.json") ? load_scene(floor / "gt.json")
                                              : clone_scene(after.get());
  ObsPtr obs = load_boundaries(floor / "boundaries");
  CString tri;
  check(pba_report_triptych_svg(before.get(), after.get(), gt.get(), tri.out()), "report");
  write_file(out / "layout.svg", tri.str());
  manifest.output("layout", (out / "layout.svg").string());
  for (std::size_t i = 0; i < pba_scene_camera_count(after.get()); ++i) {
    pba_camera cam{};
    check(pba_scene_camera(after.get(), i, &cam), "camera");
    CString svg;
    check(pba_report_camera_svg(after.get(), obs.get(), i, svg.out()), "report");
    const std::string file = "camera_" + std::to_string(cam.id) + ".svg";
    write_file(out / file, svg.str());
    manifest.output(file, (out / file).string());
  }
  manifest.write(out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar bundle adjustment for floor-plan layouts and panorama poses"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pba_version()));
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Floors processed in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.set_config("--config", "", "TOML config file; sections are named after subcommands");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen_cmd->add_option("--out", gen.out, "Dataset directory")->required();
  gen_cmd->add_option("--floors", gen.floors)->capture_default_str();
  gen_cmd->add_option("--imgs-per-room", gen.imgs_per_room)->capture_default_str();
  gen_cmd->add_option("--width", gen.width, "Panorama columns")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.sigma, "Start-scene noise, fraction of extent")
      ->capture_default_str();
  gen_cmd->add_option("--boundary-chance", gen.boundary_chance)->capture_default_str();
  gen_cmd->add_option("--boundary-max-scale", gen.boundary_max_scale)->capture_default_str();
  gen_cmd->add_option("--min-rooms", gen.min_rooms)->capture_default_str();
  gen_cmd->add_option("--max-rooms", gen.max_rooms)->capture_default_str();
  gen_cmd->add_option("--extent", gen.extent)->capture_default_str();
  gen_cmd->add_option("--min-room-size", gen.min_room_size)->capture_default_str();
  gen_cmd->add_option("--notch-probability", gen.notch_probability)->capture_default_str();
  gen_cmd->add_option("--camera-height", gen.camera_height)->capture_default_str();
  gen_cmd->add_option("--rooms", gen.rooms, "Scene JSON with room polygons to ingest");

  PerturbOptions perturb;
  auto* perturb_cmd = app.add_subcommand("perturb", "Add scene and boundary noise");
  perturb_cmd->add_option("--in", perturb.in)->required();
  perturb_cmd->add_option("--out", perturb.out)->required();
  perturb_cmd->add_option("--sigma", perturb.sigma)->capture_default_str();
  perturb_cmd->add_option("--boundary-chance", perturb.boundary_chance)->capture_default_str();
  perturb_cmd->add_option("--boundary-max-scale", perturb.boundary_max_scale)
      ->capture_default_str();

  RenderOptions render;
  auto* render_cmd = app.add_subcommand("render", "Render floor boundaries from gt.json");
  render_cmd->add_option("--in", render.in)->required();
  render_cmd->add_option("--out", render.out, "Defaults to rendering in place");
  render_cmd->add_option("--width", render.width)->capture_default_str();
  render_cmd->add_option("--boundary-chance", render.boundary_chance)->capture_default_str();
  render_cmd->add_option("--boundary-max-scale", render.boundary_max_scale)
      ->capture_default_str();

  OptimizeOptions optim;
  auto* opt_cmd = app.add_subcommand("optimize", "Refine scenes by planar bundle adjustment");
  opt_cmd->add_option("--in", optim.in)->required();
  opt_cmd->add_option("--out", optim.out)->required();
  opt_cmd->add_option("--iterations", optim.config.iterations)->capture_default_str();
  opt_cmd->add_option("--step-scale", optim.config.step_scale)->capture_default_str();
  opt_cmd->add_option("--lm-damping", optim.config.lm_damping)->capture_default_str();
  opt_cmd->add_option("--tol", optim.config.convergence_tol)->capture_default_str();
  opt_cmd->add_option("--mask-probability", optim.config.mask_probability)->capture_default_str();
  opt_cmd->add_option("--huber-k", optim.config.huber_k)->capture_default_str();
  opt_cmd->add_option("--huber-delta-min", optim.config.huber_delta_min)->capture_default_str();
  opt_cmd->add_flag("--fix-walls", optim.fix_walls);
  opt_cmd->add_flag("--fix-cameras", optim.fix_cameras);
  opt_cmd->add_option("--noisy-boundaries", optim.noisy,
                      "auto reads the dataset manifest")
      ->check(CLI::IsMember({"auto", "yes", "no"}))
      ->capture_default_str();

  FeaturesOptions feat;
  auto* feat_cmd = app.add_subcommand("features", "Dump conditioning statistics");
  feat_cmd->add_option("--in", feat.in)->required();
  feat_cmd->add_option("--out", feat.out)->required();
  feat_cmd->add_option("--state", feat.state, "scene, start or gt")
      ->check(CLI::IsMember({"scene", "start", "gt"}))
      ->capture_default_str();
  feat_cmd->add_option("--lm-damping", feat.lm_damping)->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval_cmd->add_option("--pred", eval.pred)->required();
  eval_cmd->add_option("--gt", eval.gt)->required();
  eval_cmd->add_option("--out", eval.out, "Defaults to <pred>/eval");
  eval_cmd->add_option("--label", eval.label)->capture_default_str();
  eval_cmd->add_flag("--with-start", eval.with_start, "Also evaluate start.json as a Start row");
  eval_cmd->add_option("--ransac-threshold", eval.ransac.inlier_threshold)->capture_default_str();
  eval_cmd->add_option("--ransac-iterations", eval.ransac.iterations)->capture_default_str();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Write SVG reports for one floor");
  report_cmd->add_option("--floor", report.floor)->required();
  report_cmd->add_option("--out", report.out, "Defaults to <floor>/report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  const auto* cfg = app.get_option("--config");
  if (cfg->count() > 0) g.config = cfg->as<std::string>();

  try {
    if (*gen_cmd) return cmd_gen(gen, g);
    if (*perturb_cmd) return cmd_perturb(perturb, g);
    if (*render_cmd) return cmd_render(render, g);
    if (*opt_cmd) return cmd_optimize(optim, g);
    if (*feat_cmd) return cmd_features(feat, g);
    if (*eval_cmd) return cmd_eval(eval, g);
    if (*report_cmd) return cmd_report(report, g);
  } catch (const CliError& e) {
    log(Level::kError, e.what());
    return e.code;
  } catch (const fs::filesystem_error& e) {
    log(Level::kError, e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    log(Level::kError, e.what());
    return kExitValidation;
  }
  return kExitValidation;
}
