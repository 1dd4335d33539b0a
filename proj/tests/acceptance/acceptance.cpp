// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planar_ba/evaluation.hpp"
#include "planar_ba/layout.hpp"
#include "planar_ba/optimizer.hpp"
#include "planar_ba/simulation.hpp"
#include "test_support.hpp"

using namespace planar_ba;
using planar_ba::testing::random_polygon;
using planar_ba::testing::random_room_scene;
using planar_ba::testing::render_all;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct SuiteRun {
  double start_pose = 0.0, end_pose = 0.0;
  double start_layout = 0.0, end_layout = 0.0;
  double max_seconds = 0.0;
  std::vector<double> start_reproj, end_reproj;  // per floor means
};

SuiteRun run_suite(int floors, double boundary_chance) {
  const ImageGeometry geom(512);
  MetricsSuite start_suite, end_suite;
  SuiteRun run;
  for (int f = 0; f < floors; ++f) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(f);
    Scene gt = generate_floorplan(seed);
    gt.cameras = sample_cameras(gt, 1.0, seed);
    NoiseConfig noise;
    noise.boundary_chance = boundary_chance;
    noise.boundary_max_scale = 0.02;
    std::vector<BoundaryObservation> boundaries;
    std::vector<ColumnAssignment> assignments;
    for (const auto& cam : gt.cameras) {
      auto [b, a] = boundary_chance > 0.0 ? perturb_boundaries(gt, cam, geom, noise, 77 + seed)
                                          : render_boundary(gt, cam, geom);
      boundaries.push_back(std::move(b));
      assignments.push_back(std::move(a));
    }
    const Scene start = perturb_scene(gt, 0.033, 5000 + seed);
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizeResult res =
        optimize(start, boundaries, assignments, geom, OptimizerConfig{}, boundary_chance > 0.0);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.max_seconds = std::max(run.max_seconds, dt);
    const RansacConfig ransac;
    FloorMetrics a = evaluate_floor(start, gt, boundaries, assignments, geom, ransac);
    FloorMetrics b = evaluate_floor(res.scene, gt, boundaries, assignments, geom, ransac);
    run.start_reproj.push_back(compute_stats(a.reprojection_px).mean);
    run.end_reproj.push_back(compute_stats(b.reprojection_px).mean);
    start_suite.add(std::to_string(f), std::move(a));
    end_suite.add(std::to_string(f), std::move(b));
  }
  run.start_pose = start_suite.pooled("pose_translation").mean;
  run.end_pose = end_suite.pooled("pose_translation").mean;
  run.start_layout = start_suite.pooled("layout_wall").mean;
  run.end_layout = end_suite.pooled("layout_wall").mean;
  return run;
}

Outcome criterion1(const SuiteRun& r) {
  const bool start_ok = r.start_pose >= 3.0 && r.start_pose <= 3.5;
  const bool end_ok = r.end_pose <= 1.0 && r.end_layout <= 1.0;
  const bool time_ok = r.max_seconds <= 30.0;
  return {start_ok && end_ok && time_ok,
          fmt("start pose %.3f%% [3.0, 3.5] %s; end pose %.3f%% <= 1.0 %s; end layout %.3f%% "
              "<= 1.0 %s; max %.2f s/floor <= 30 %s",
              r.start_pose, start_ok ? "ok" : "no", r.end_pose, r.end_pose <= 1.0 ? "ok" : "no",
              r.end_layout, r.end_layout <= 1.0 ? "ok" : "no", r.max_seconds,
              time_ok ? "ok" : "no")};
}

Outcome criterion2(const SuiteRun& clean, const SuiteRun& noisy) {
  const double ratio = noisy.end_pose / clean.end_pose;
  const bool below = noisy.end_pose < noisy.start_pose;
  return {ratio >= 1.5 && below,
          fmt("noisy end pose %.3f%%, clean %.3f%%, ratio %.3f >= 1.5 %s; below start %.3f%% %s",
              noisy.end_pose, clean.end_pose, ratio, ratio >= 1.5 ? "ok" : "no",
              noisy.start_pose, below ? "ok" : "no")};
}

double row_of(const Wall& w, const CameraPose& cam, int c, const ImageGeometry& g) {
  return project_column(w, cam, c, g).value();
}

Outcome criterion3() {
  Rng rng(3003);
  const ImageGeometry g(512);
  const double h = 1e-6;
  long configs = 0, passed = 0;
  double worst = 0.0;
  while (configs < 20000) {
    const Scene s = random_room_scene(rng, true);
    const auto [b, a] = render_boundary(s, s.cameras[0], g);
    for (int k = 0; k < 50; ++k) {
      const int c = rng.uniform_int(0, g.width() - 1);
      const Wall& w = s.wall(a.walls[c]);
      const auto j = column_jacobian(w, s.cameras[0], c, g);
      if (!j) continue;
      Vec3 fd;
      Wall wp = w, wm = w;
      wp.offset += h;
      wm.offset -= h;
      fd[0] = (row_of(wp, s.cameras[0], c, g) - row_of(wm, s.cameras[0], c, g)) / (2 * h);
      for (int axis = 0; axis < 2; ++axis) {
        CameraPose cp = s.cameras[0], cm = s.cameras[0];
        cp.position[axis] += h;
        cm.position[axis] -= h;
        fd[1 + axis] = (row_of(w, cp, c, g) - row_of(w, cm, c, g)) / (2 * h);
      }
      const double rel = (fd - *j).norm() / j->norm();
      worst = std::max(worst, rel);
      ++configs;
      passed += rel < 1e-5;
    }
  }
  return {passed == configs,
          fmt("%ld/%ld configurations within 1e-5, worst relative error %.2e", passed, configs,
              worst)};
}

Outcome criterion4() {
  const ImageGeometry g(512);
  int ok = 0;
  for (std::uint64_t seed = 4000; seed < 4050; ++seed) {
    const Scene gt = testing::generated_floor(seed);
    const auto r = render_all(gt, g);
    const auto field = compute_adjustment_field(gt, r.boundaries, r.assignments, g);
    bool zero = field.valid_count() > 0;
    for (const auto& e : field.entries) {
      if (e.valid && (e.delta_b != 0.0 || e.delta_t.x() != 0.0 || e.delta_t.y() != 0.0)) {
        zero = false;
      }
    }
    const auto res = optimize(gt, r.boundaries, r.assignments, g, OptimizerConfig{});
    bool same = true;
    for (std::size_t i = 0; i < gt.rooms.size(); ++i) {
      same = same && res.scene.rooms[i].vertices == gt.rooms[i].vertices;
      for (std::size_t k = 0; k < gt.rooms[i].walls.size(); ++k) {
        same = same && res.scene.rooms[i].walls[k].offset == gt.rooms[i].walls[k].offset;
      }
    }
    for (std::size_t i = 0; i < gt.cameras.size(); ++i) {
      same = same && res.scene.cameras[i].position == gt.cameras[i].position;
    }
    ok += zero && same;
  }
  return {ok == 50, fmt("%d/50 floors with an exactly zero field and an unchanged scene", ok)};
}

Outcome criterion5() {
  Rng rng(5005);
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const RoomPolygon room = make_room(0, "r", random_polygon(rng, true));
    std::vector<Vec2> dirs;
    for (const auto& w : room.walls) dirs.push_back(w.direction);
    const auto offsets = offsets_from_vertices(room);
    const auto verts = vertices_from_offsets(dirs, offsets);
    double err = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      err = std::max(err, (verts[i] - room.vertices[i]).lpNorm<Eigen::Infinity>());
    }
    const auto again = offsets_from_vertices(make_room(0, "r", verts));
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      err = std::max(err, std::abs(again[i] - offsets[i]));
    }
    worst = std::max(worst, err);
    ok += err < 1e-9;
  }
  return {ok == 1000, fmt("%d/1000 polygons round trip within 1e-9, worst %.2e", ok, worst)};
}

Outcome criterion6() {
  Rng rng(6006);
  int ok = 0;
  double worst_cross = 0.0, worst_idem = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto loop = random_polygon(rng, true);
    const std::size_t k = loop.size();
    std::vector<Vec2> dirs;
    for (std::size_t i = 0; i < k; ++i) dirs.push_back((loop[(i + 1) % k] - loop[i]).normalized());
    const ValidityMask mask = build_validity_mask(dirs);
    std::size_t flags = 0;
    for (const auto& m : mask) flags += m[0] + m[1];
    std::vector<Vec2> pred = loop;
    for (auto& v : pred) v += Vec2{rng.normal(0, 0.02), rng.normal(0, 0.02)};
    const std::size_t start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(k) - 1));
    const auto out = ldr_propagate(pred, dirs, mask, start);
    double cross_max = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) {
      const std::size_t cur = (start + j) % k, next = (cur + 1) % k;
      const Vec2 e = out[next] - out[cur];
      cross_max = std::max(cross_max, std::abs(e.x() * dirs[cur].y() - e.y() * dirs[cur].x()));
    }
    const auto again = ldr_propagate(out, dirs, mask, start);
    double idem = 0.0;
    for (std::size_t i = 0; i < k; ++i) idem = std::max(idem, (again[i] - out[i]).norm());
    worst_cross = std::max(worst_cross, cross_max);
    worst_idem = std::max(worst_idem, idem);
    ok += flags == k && cross_max < 1e-9 && idem < 1e-9;
  }
  return {ok == 1000, fmt("%d/1000 cases; worst cross %.2e, worst idempotence gap %.2e", ok,
                          worst_cross, worst_idem)};
}

Outcome criterion7() {
  Rng rng(7007);
  const RansacConfig cfg;
  int clean_ok = 0, outlier_ok = 0;
  double worst_clean = 0.0, worst_outlier = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(5, 30);
    const double phi = rng.uniform(-kPi, kPi);
    const Vec2 t{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    std::vector<Vec2> gt(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gt[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      pred[i] = rotate(gt[i] - t, -phi);
    }
    auto err_of = [&](const Alignment& a, int from) {
      double e = 0.0;
      for (int i = from; i < n; ++i) e = std::max(e, (a.transform.apply(pred[i]) - gt[i]).norm());
      return e;
    };
    const double e0 = err_of(ransac_align(pred, gt, cfg), 0);
    const int outliers = static_cast<int>(std::floor(0.3 * n));
    for (int i = 0; i < outliers; ++i) {
      const double a = rng.uniform(-kPi, kPi);
      pred[i] += rng.uniform(0.5, 1.5) * Vec2{std::cos(a), std::sin(a)};
    }
    const double e1 = err_of(ransac_align(pred, gt, cfg), outliers);
    worst_clean = std::max(worst_clean, e0);
    worst_outlier = std::max(worst_outlier, e1);
    clean_ok += e0 < 1e-9;
    outlier_ok += e1 < 1e-6;
  }
  return {clean_ok == 200 && outlier_ok == 200,
          fmt("clean %d/200 (worst %.2e), 30%% outliers %d/200 (worst %.2e)", clean_ok,
              worst_clean, outlier_ok, worst_outlier)};
}

Outcome criterion8() {
  const ImageGeometry g(512);
  long columns = 0, exact = 0;
  for (std::uint64_t seed = 8000; seed < 8050; ++seed) {
    const Scene s = testing::generated_floor(seed, 2.0);
    for (const auto& cam : s.cameras) {
      const auto [b, a] = render_boundary(s, cam, g);
      const auto p = project_assigned_boundary(s, cam, a, g);
      for (int c = 0; c < g.width(); ++c) {
        ++columns;
        exact += b.rows[c].has_value() == p.rows[c].has_value() &&
                 (!b.rows[c] || *b.rows[c] == *p.rows[c]);
      }
    }
  }
  const double z = 0.35, H = 256.0;
  const double r1 = cam2d_to_pixel_row({z, 0}, z, 256);
  const double r2 = cam2d_to_pixel_row({0, std::sqrt(3.0) * z}, z, 256);
  const double e1 = std::abs(r1 - 0.75 * H), e2 = std::abs(r2 - H * 2.0 / 3.0);
  return {exact == columns && e1 < 1e-9 && e2 < 1e-9,
          fmt("%ld/%ld columns bit-exact; |row(z) - 0.75H| = %.1e, |row(sqrt3 z) - 2H/3| = %.1e",
              exact, columns, e1, e2)};
}

Outcome criterion9(const SuiteRun& r) {
  const std::size_t n = r.start_reproj.size();
  std::size_t improved = 0;
  for (std::size_t i = 0; i < n; ++i) improved += r.end_reproj[i] <= r.start_reproj[i];
  const double frac = static_cast<double>(improved) / static_cast<double>(n);
  const double ms = median_of(r.start_reproj), me = median_of(r.end_reproj);
  return {frac >= 0.95 && me < ms,
          fmt("%zu/%zu floors not worse (%.1f%% >= 95%%); median %.4f px -> %.4f px", improved,
              n, 100.0 * frac, ms, me)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int floors = 100;
  app.add_option("--floors", floors, "Floors in the BA suites")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const SuiteRun clean = run_suite(floors, 0.0);
  const SuiteRun noisy = run_suite(floors, 0.1);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"BA-Only clean suite", [&] { return criterion1(clean); }},
      {"boundary-noise degradation", [&] { return criterion2(clean, noisy); }},
      {"Jacobian vs finite differences", criterion3},
      {"ground-truth fixed point", criterion4},
      {"vertex/offset round trip", criterion5},
      {"LDR properties", criterion6},
      {"RANSAC alignment", criterion7},
      {"renderer self-consistency", criterion8},
      {"reprojection improvement", [&] { return criterion9(clean); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = criteria[i].second();
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
