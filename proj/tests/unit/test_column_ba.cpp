#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "planar_ba/column_ba.hpp"
#include "planar_ba/error.hpp"
#include "test_support.hpp"

using namespace planar_ba;
using planar_ba::testing::random_room_scene;
using planar_ba::testing::render_all;
using planar_ba::testing::unit_square_scene;

namespace {

// Solves (J J^T + lambda diag(J J^T)) x = -J eps on the active block by
// partial-pivot Gaussian elimination.
Vec3 normal_equation_oracle(double eps, const Vec3& j, double lambda) {
  std::vector<int> idx;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(j[i]) >= 1e-12) idx.push_back(i);
  }
  const int n = static_cast<int>(idx.size());
  double a[3][4] = {};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a[r][c] = j[idx[r]] * j[idx[c]];
    a[r][r] *= 1.0 + lambda;
    a[r][n] = -j[idx[r]] * eps;
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    for (int c = 0; c <= n; ++c) std::swap(a[col][c], a[piv][c]);
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  double x[3] = {};
  for (int r = n - 1; r >= 0; --r) {
    double s = a[r][n];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  Vec3 out = Vec3::Zero();
  for (int r = 0; r < n; ++r) out[idx[r]] = x[r];
  return out;
}

double row_of(const Wall& w, const CameraPose& cam, int c, const ImageGeometry& g) {
  return project_column(w, cam, c, g).value();
}

}  // namespace

TEST_CASE("residual sign") {
  const Scene s = unit_square_scene();
  const ImageGeometry g(512);
  const auto [b, a] = render_boundary(s, s.cameras[0], g);
  const int c = 256;
  const Wall& w = s.wall(a.walls[c]);
  CHECK(column_residual(w, s.cameras[0], *b.rows[c], c, g).value() == 0.0);
  CHECK(column_residual(w, s.cameras[0], *b.rows[c] + 2.0, c, g).value() ==
        doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(column_residual(w, s.cameras[0], *b.rows[c] - 1.5, c, g).value() ==
        doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("jacobian closed form at the wall foot") {
  // Camera at the origin, 512 columns rotated so that column 256 looks along +y
  // at the wall y = z. Then d = z and d row / d d = -(H / pi) / (2 z).
  const double z = 0.35;
  Scene s = unit_square_scene(z, Vec2::Zero(), z);
  s.cameras[0].rotation = -kPi / 512;
  const ImageGeometry g(512);
  const auto [b, a] = render_boundary(s, s.cameras[0], g);
  const Wall& w = s.wall(a.walls[256]);
  REQUIRE((w.normal - Vec2(0, -1)).norm() < 1e-12);
  const Vec3 j = column_jacobian(w, s.cameras[0], 256, g).value();
  const double drow = -(256.0 / kPi) / (2.0 * z);
  // n . r = -1, so d(d)/db = -1 and d(d)/dT = (0, -1).
  CHECK(j[0] == doctest::Approx(-drow).epsilon(1e-9));
  CHECK(std::abs(j[1]) < 1e-9);
  CHECK(j[2] == doctest::Approx(-drow).epsilon(1e-9));
}

TEST_CASE("jacobian matches central differences") {
  Rng rng(17);
  const ImageGeometry g(512);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Scene s = random_room_scene(rng);
    const auto [b, a] = render_boundary(s, s.cameras[0], g);
    for (int c = 0; c < 512; c += 7) {
      const Wall& w = s.wall(a.walls[c]);
      const auto j = column_jacobian(w, s.cameras[0], c, g);
      if (!j) continue;
      const double h = 1e-6;
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
      CHECK((fd - *j).norm() / std::max(j->norm(), 1e-12) < 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("sliding along the wall does not change the projection") {
  Rng rng(19);
  const ImageGeometry g(256);
  for (int trial = 0; trial < 50; ++trial) {
    const Scene s = random_room_scene(rng);
    const auto [b, a] = render_boundary(s, s.cameras[0], g);
    for (int c = 0; c < 256; c += 13) {
      const Wall& w = s.wall(a.walls[c]);
      if (const auto j = column_jacobian(w, s.cameras[0], c, g)) {
        // dT along the wall direction leaves n . T and so d unchanged.
        CHECK(std::abs(j->tail<2>().dot(w.direction)) < 1e-9 * j->norm());
      }
    }
  }
}

TEST_CASE("lm_step examples") {
  LmStep st = lm_step(2.0, {1, 0, 0}, 0.1);
  CHECK(st.delta[0] == doctest::Approx(-2.0 / 1.1).epsilon(1e-14));
  CHECK(st.delta[0] == doctest::Approx(-1.8182).epsilon(1e-4));
  CHECK(st.delta[1] == 0.0);
  CHECK(st.active == std::array<bool, 3>{true, false, false});

  st = lm_step(0.0, {3, -2, 1}, 0.1);
  CHECK(st.delta == Vec3::Zero());

  st = lm_step(1.0, {0, 0, 0}, 0.1);
  CHECK(st.degenerate);
  CHECK(st.delta == Vec3::Zero());

  CHECK_THROWS_AS(lm_step(1.0, {1, 0, 0}, 0.0), Error);
  CHECK_THROWS_AS(lm_step(NAN, {1, 0, 0}, 0.1), Error);
}

TEST_CASE("lm_step agrees with the damped normal equations") {
  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    Vec3 j{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
    if (i % 5 == 0) j[i % 3] = 0.0;
    const double eps = rng.uniform(-20, 20);
    const double lambda = rng.uniform(0.01, 2.0);
    const LmStep st = lm_step(eps, j, lambda);
    const Vec3 oracle = normal_equation_oracle(eps, j, lambda);
    CHECK((st.delta - oracle).norm() <= 1e-9 * std::max(1.0, oracle.norm()));
    // Linearized residual shrinks: eps + J . delta = eps * lambda / (n + lambda).
    const double lin = eps + j.dot(st.delta);
    CHECK(std::abs(lin) <= std::abs(eps) + 1e-12);
  }
}

TEST_CASE("huber soft clamp") {
  CHECK(huber_soft_clamp(0.5, 1.0) == 0.5);
  CHECK(huber_soft_clamp(-1.0, 1.0) == -1.0);
  CHECK(huber_soft_clamp(10.0, 1.0) == doctest::Approx(std::sqrt(19.0)).epsilon(1e-15));
  CHECK(huber_soft_clamp(-10.0, 1.0) == doctest::Approx(-std::sqrt(19.0)).epsilon(1e-15));

  Rng rng(29);
  for (int i = 0; i < 5000; ++i) {
    const double x = rng.uniform(-100, 100);
    const double y = x + rng.uniform(0, 10);
    const double d = rng.uniform(1e-6, 5);
    const double hx = huber_soft_clamp(x, d);
    CHECK(std::abs(hx) <= std::abs(x));
    CHECK(huber_soft_clamp(-x, d) == -hx);
    CHECK(huber_soft_clamp(y, d) >= hx);
    CHECK(hx * x >= 0.0);
  }
}

TEST_CASE("median and MAD against a sort oracle") {
  CHECK(median_of({}) == 0.0);
  CHECK(median_of({3, 1, 2}) == 2.0);
  CHECK(median_of({4, 1, 3, 2}) == 2.5);
  const std::vector<double> v{1, 1, 2, 2, 4, 6, 9};
  CHECK(median_absolute_deviation(v) == 1.0);

  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 40);
    std::vector<double> x(n);
    for (auto& e : x) e = rng.normal();
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    const double med = n % 2 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2;
    CHECK(median_of(x) == med);
    std::vector<double> dev;
    for (double e : x) dev.push_back(std::abs(e - med));
    std::sort(dev.begin(), dev.end());
    const double mad = n % 2 ? dev[n / 2] : (dev[n / 2 - 1] + dev[n / 2]) / 2;
    CHECK(median_absolute_deviation(x) == mad);
  }
}

TEST_CASE("robust filter uses the group MAD") {
  const std::vector<double> v{1, 1, 2, 2, 4, 6, 9};
  const auto out = robust_filter(v);
  const double delta = 1.345;
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == huber_soft_clamp(v[i], delta));
  // Identical values have MAD 0, so delta falls back to the floor.
  const auto flat = robust_filter(std::vector<double>{0.5, 0.5, 0.5});
  for (double f : flat) CHECK(f == doctest::Approx(std::sqrt(1e-6 * (1.0 - 1e-6))));
}

TEST_CASE("adjustment field vanishes at ground truth") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scene s = planar_ba::testing::generated_floor(seed);
    const ImageGeometry g(512);
    const auto r = render_all(s, g);
    const auto f = compute_adjustment_field(s, r.boundaries, r.assignments, g);
    CHECK(f.valid_count() > 0);
    for (const auto& e : f.entries) {
      if (!e.valid) continue;
      CHECK(e.residual == 0.0);
      CHECK(e.delta_b == 0.0);
      CHECK(e.delta_t == Vec2::Zero());
    }
  }
}

TEST_CASE("adjustment field restores a shifted wall") {
  const Scene gt = unit_square_scene(0.5, {0.05, -0.03});
  const ImageGeometry g(512);
  const auto r = render_all(gt, g);
  for (double shift : {0.04, -0.04}) {
    Scene moved = gt;
    std::vector<double> offsets = offsets_from_vertices(moved.rooms[0]);
    offsets[2] += shift;
    std::vector<Vec2> dirs;
    for (const auto& w : moved.rooms[0].walls) dirs.push_back(w.direction);
    moved.rooms[0] = make_room(0, "room", vertices_from_offsets(dirs, offsets));
    FieldConfig cfg;
    const auto f = compute_adjustment_field(moved, r.boundaries, r.assignments, g, cfg);
    int n = 0;
    for (const auto& e : f.entries) {
      if (!e.valid || e.wall_id != 2) continue;
      CHECK(e.delta_b * shift < 0.0);
      // Moving each point back along the ray lands on the true wall line.
      const Vec2 hit = gt.cameras[0].position +
                       (moved.wall(2).offset - moved.wall(2).normal.dot(gt.cameras[0].position)) /
                           moved.wall(2).normal.dot(column_ray(gt.cameras[0], e.column, g)) *
                           column_ray(gt.cameras[0], e.column, g);
      CHECK(std::abs(gt.wall(2).normal.dot(hit + e.hit_displacement) - gt.wall(2).offset) < 1e-9);
      ++n;
    }
    CHECK(n > 10);
  }
}

TEST_CASE("mask probability one drops every column") {
  const Scene s = unit_square_scene();
  const ImageGeometry g(128);
  const auto r = render_all(s, g);
  FieldConfig cfg;
  cfg.mask_probability = 1.0;
  CHECK(compute_adjustment_field(s, r.boundaries, r.assignments, g, cfg).entries.empty());
  cfg.mask_probability = 0.5;
  const auto half = compute_adjustment_field(s, r.boundaries, r.assignments, g, cfg);
  CHECK(half.entries.size() > 30);
  CHECK(half.entries.size() < 98);
}

TEST_CASE("field rejects mismatched inputs") {
  const Scene s = unit_square_scene();
  const ImageGeometry g(128);
  auto r = render_all(s, g);
  CHECK_THROWS_AS(compute_adjustment_field(s, r.boundaries, r.assignments, ImageGeometry(64)),
                  Error);
  r.boundaries[0].camera_id = 9;
  CHECK_THROWS_AS(compute_adjustment_field(s, r.boundaries, r.assignments, g), Error);
}

TEST_CASE("field CSV") {
  AdjustmentField f;
  ColumnAdjustment e;
  e.camera_id = 2;
  e.wall_id = 5;
  e.column = 7;
  e.delta_b = 0.25;
  e.delta_t = {-0.5, 1.0};
  e.valid = true;
  f.entries.push_back(e);
  e.valid = false;
  f.entries.push_back(e);
  CHECK(adjustment_field_csv(f) ==
        "camera_id,wall_id,column,delta_b,delta_tx,delta_ty\n2,5,7,0.25,-0.5,1\n");
}
