#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "planar_ba/error.hpp"
#include "planar_ba/evaluation.hpp"
#include "test_support.hpp"

using namespace planar_ba;
using planar_ba::testing::generated_floor;
using planar_ba::testing::render_all;
using planar_ba::testing::unit_square_scene;

namespace {

// Brute-force quantile: sort and interpolate between neighbours.
double quantile_oracle(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

// Applies p -> rot(phi) p + t to a scene. Camera rotations are measured
// clockwise from +y, so they shift by -phi.
Scene transform_scene(const Scene& s, double phi, const Vec2& t) {
  Scene out = s;
  for (auto& room : out.rooms) {
    std::vector<Vec2> v;
    for (const auto& p : room.vertices) v.push_back(rotate(p, phi) + t);
    room = make_room(room.id, room.room_type, v);
  }
  for (auto& c : out.cameras) {
    c.position = rotate(c.position, phi) + t;
    c.rotation -= phi;
  }
  return out;
}

}  // namespace

TEST_CASE("quantile and stats against a sort oracle") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5}, 0.9) == 5.0);
  CHECK(quantile({}, 0.5) == 0.0);
  const ErrorStats st = compute_stats(std::vector<double>{1, 2, 3, 4});
  CHECK(st.mean == 2.5);
  CHECK(st.median == 2.5);
  CHECK(st.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(st.p90 == doctest::Approx(3.7));
  CHECK(st.count == 4);

  Rng rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(rng.uniform_int(1, 60));
    for (auto& e : v) e = rng.uniform(-5, 5);
    for (double q : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      CHECK(std::abs(quantile(v, q) - quantile_oracle(v, q)) < 1e-12);
    }
    const ErrorStats s = compute_stats(v);
    double m = 0.0, ss = 0.0;
    for (double e : v) m += e / v.size();
    for (double e : v) ss += (e - m) * (e - m) / v.size();
    CHECK(s.mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(s.std == doctest::Approx(std::sqrt(ss)).epsilon(1e-9));
    CHECK(s.median == quantile_oracle(v, 0.5));
    CHECK(s.p90 == doctest::Approx(quantile_oracle(v, 0.9)).epsilon(1e-12));
  }
}

TEST_CASE("pose errors") {
  const Scene gt = unit_square_scene();
  Scene pred = gt;
  const RigidTransform2 id;
  auto e = pose_errors(pred.cameras, gt.cameras, id);
  CHECK(e.translation_pct == std::vector<double>{0.0});
  CHECK(e.rotation_deg == std::vector<double>{0.0});

  // Percentages are relative to the normalized extent of 2.
  pred.cameras[0].position += Vec2{0.06, 0.08};
  pred.cameras[0].rotation = 0.1;
  e = pose_errors(pred.cameras, gt.cameras, id, 0.5);
  CHECK(e.translation_pct[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(e.translation_raw[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(e.rotation_deg[0] == doctest::Approx(0.1 * 180 / kPi));
  pred.cameras[0].position = gt.cameras[0].position + Vec2{0.03, 0.04};
  e = pose_errors(pred.cameras, gt.cameras, id);
  CHECK(e.translation_pct[0] == doctest::Approx(2.5).epsilon(1e-12));

  pred.cameras[0].rotation = gt.cameras[0].rotation + 2 * kPi - 0.01;
  e = pose_errors(pred.cameras, gt.cameras, id);
  CHECK(e.rotation_deg[0] == doctest::Approx(0.01 * 180 / kPi).epsilon(1e-9));

  pred.cameras.push_back(pred.cameras[0]);
  CHECK_THROWS_AS(pose_errors(pred.cameras, gt.cameras, id), Error);
}

TEST_CASE("layout errors with one shifted wall") {
  const Scene gt = generated_floor(31);
  const ImageGeometry g(512);
  const auto r = render_all(gt, g);
  const auto visible = visible_walls(gt, r.assignments);
  const auto nvis = std::count(visible.begin(), visible.end(), true);
  REQUIRE(nvis > 0);
  int target = 0;
  while (!visible[target]) ++target;

  Scene pred = gt;
  const WallRef ref = pred.wall_ref(target);
  RoomPolygon& room = pred.rooms[ref.room];
  std::vector<double> offsets = offsets_from_vertices(room);
  offsets[ref.edge] += 0.02;
  std::vector<Vec2> dirs;
  for (const auto& w : room.walls) dirs.push_back(w.direction);
  room.vertices = vertices_from_offsets(dirs, offsets);
  for (std::size_t k = 0; k < dirs.size(); ++k) room.walls[k].offset = offsets[k];

  const auto zero = layout_errors(gt, gt, visible, {});
  for (double v : zero.wall_pct) CHECK(v == 0.0);
  for (double v : zero.vertex_pct) CHECK(v == 0.0);

  const auto le = layout_errors(pred, gt, visible, {});
  CHECK(static_cast<long>(le.wall_pct.size()) == nvis);
  const ErrorStats st = compute_stats(le.wall_pct);
  CHECK(*std::max_element(le.wall_pct.begin(), le.wall_pct.end()) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(st.mean == doctest::Approx(1.0 / nvis).epsilon(1e-9));
}

TEST_CASE("reprojection closed form") {
  const double z = 0.35;
  Scene gt = unit_square_scene(z, Vec2::Zero(), z);
  gt.cameras[0].rotation = -kPi / 512;
  const ImageGeometry g(512);
  const auto r = render_all(gt, g);
  CHECK(compute_stats(reprojection_errors(gt, r.boundaries, r.assignments, g)).mean == 0.0);

  // Move the wall in front of column 256 from y = z to y = 2 z.
  Scene pred = gt;
  std::vector<double> offsets = offsets_from_vertices(pred.rooms[0]);
  const int w = r.assignments[0].walls[256];
  offsets[w] -= z;
  std::vector<Vec2> dirs;
  for (const auto& wall : pred.rooms[0].walls) dirs.push_back(wall.direction);
  pred.rooms[0] = make_room(0, "room", vertices_from_offsets(dirs, offsets));
  const auto px = reprojection_errors(pred, r.boundaries, r.assignments, g);
  const double expected = 256.0 / kPi * (std::atan(1.0) - std::atan(0.5));
  CHECK(expected == doctest::Approx(26.2).epsilon(0.002));
  // Column 256 is the 257th assigned column of the only camera.
  REQUIRE(px.size() == 512);
  CHECK(px[256] == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("masked L2 metric") {
  const Scene gt = unit_square_scene();
  const auto masks = scene_validity_masks(gt);
  CHECK(masked_l2_metric(gt, gt, masks) == 0.0);
  Scene pred = gt;
  // Vertex 1 follows wall 0 (horizontal), so x is its valid coordinate.
  REQUIRE(masks[0][1] == std::array<bool, 2>{true, false});
  pred.rooms[0].vertices[1].x() += 0.1;
  CHECK(masked_l2_metric(pred, gt, masks) == doctest::Approx(0.1).epsilon(1e-12));
  pred = gt;
  pred.rooms[0].vertices[1].y() += 0.3;
  CHECK(masked_l2_metric(pred, gt, masks) == 0.0);
  pred.cameras[0].position += Vec2{0.03, 0.04};
  CHECK(masked_l2_metric(pred, gt, masks) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(combined_objective(0.05, 2.56, 256) == doctest::Approx(1.05));
}

TEST_CASE("planted rigid transforms are recovered") {
  Rng rng(67);
  RansacConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(4, 20);
    const double phi = trial == 0 ? kPi / 2 : rng.uniform(-kPi, kPi);
    const Vec2 t{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    std::vector<Vec2> gt(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gt[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
      // pred = R^-1 (gt - t), so the alignment pred -> gt is (phi, t).
      pred[i] = rotate(gt[i] - t, -phi);
    }
    auto a = ransac_align(pred, gt, cfg);
    CHECK(std::abs(wrap_angle(a.transform.angle - phi)) < 1e-9);
    CHECK((a.transform.translation - t).norm() < 1e-9);

    // 30% gross outliers.
    const int outliers = static_cast<int>(std::floor(0.3 * n));
    for (int i = 0; i < outliers; ++i) pred[i] += Vec2{rng.uniform(1, 2), rng.uniform(-2, -1)};
    a = ransac_align(pred, gt, cfg);
    CHECK(std::abs(wrap_angle(a.transform.angle - phi)) < 1e-6);
    CHECK((a.transform.translation - t).norm() < 1e-6);
    for (int i = 0; i < n; ++i) CHECK(a.inliers[i] == (i >= outliers));
  }
}

TEST_CASE("ransac edge cases") {
  RansacConfig cfg;
  const std::vector<Vec2> one{{0.1, 0.2}};
  const auto a = ransac_align(one, one, cfg);
  CHECK(a.warnings.size() == 1);
  CHECK(a.transform.angle == 0.0);
  const std::vector<Vec2> two{{0, 0}, {1, 0}};
  CHECK_THROWS_AS(ransac_align(one, two, cfg), Error);

  // More pairs than iterations: random sampling stays deterministic.
  cfg.iterations = 10;
  std::vector<Vec2> many;
  Rng rng(3);
  for (int i = 0; i < 30; ++i) many.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
  const auto x = ransac_align(many, many, cfg);
  const auto y = ransac_align(many, many, cfg);
  CHECK(x.transform.angle == y.transform.angle);
  CHECK(x.transform.translation.norm() < 1e-12);
}

TEST_CASE("metrics are invariant to a shared rigid motion") {
  const ImageGeometry g(512);
  for (std::uint64_t seed = 40; seed < 45; ++seed) {
    const Scene gt = generated_floor(seed);
    const Scene pred = perturb_scene(gt, 0.033, seed);
    const auto r = render_all(gt, g);
    const RansacConfig cfg;
    const FloorMetrics a = evaluate_floor(pred, gt, r.boundaries, r.assignments, g, cfg);
    const Scene gt2 = transform_scene(gt, 0.4, {0.05, -0.03});
    const Scene pred2 = transform_scene(pred, 0.4, {0.05, -0.03});
    const FloorMetrics b = evaluate_floor(pred2, gt2, r.boundaries, r.assignments, g, cfg);
    auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
      REQUIRE(x.size() == y.size());
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x[i] - y[i]) < 1e-9);
    };
    same(a.pose.translation_pct, b.pose.translation_pct);
    same(a.pose.rotation_deg, b.pose.rotation_deg);
    same(a.layout.wall_pct, b.layout.wall_pct);
    same(a.layout.vertex_pct, b.layout.vertex_pct);
    same(a.reprojection_px, b.reprojection_px);
  }
}

TEST_CASE("evaluate_floor on ground truth is all zeros") {
  const Scene gt = generated_floor(50, 2.0);
  const ImageGeometry g(512);
  const auto r = render_all(gt, g);
  const FloorMetrics m = evaluate_floor(gt, gt, r.boundaries, r.assignments, g, {});
  for (const auto* v : {&m.pose.translation_pct, &m.pose.translation_raw, &m.pose.rotation_deg,
                        &m.layout.wall_pct, &m.layout.vertex_pct, &m.reprojection_px}) {
    for (double x : *v) CHECK(std::abs(x) < 1e-12);
  }
  CHECK(m.masked_l2 < 1e-12);
  CHECK(m.camera_count == gt.cameras.size());
}

TEST_CASE("metrics suite output") {
  const ImageGeometry g(256);
  MetricsSuite suite;
  for (std::uint64_t seed : {10u, 2u}) {
    const Scene gt = generated_floor(seed);
    const auto r = render_all(gt, g);
    suite.add(std::to_string(seed),
              evaluate_floor(perturb_scene(gt, 0.033, seed), gt, r.boundaries, r.assignments, g,
                             {}));
  }
  suite.add_error("7", "missing scene.json");
  CHECK(suite.floor_count() == 2);
  CHECK(suite.errors().size() == 1);
  const std::string csv = suite.csv();
  CHECK(csv.rfind("floor,metric,unit,mean,median,std,p90\n", 0) == 0);
  // Floor 2 sorts before floor 10.
  CHECK(csv.find("\n2,") < csv.find("\n10,"));
  CHECK(csv.find("\nall,pose_translation,pct_extent,") != std::string::npos);
  const auto row = suite.summary_row("BA-Only");
  CHECK(row["state"] == "BA-Only");
  CHECK(row["floors"] == 2);
  CHECK(row["pose_err_pct"]["mn"].get<double>() > 0.0);
  CHECK(row.contains("visible_layout_err_pct"));
  CHECK(suite.pooled("pose_translation").count ==
        suite.pooled("pose_rotation").count);
  CHECK_THROWS_AS(suite.pooled("nope"), Error);
}
