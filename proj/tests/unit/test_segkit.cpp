#include <numbers>
#include <random>

#include "helpers.hpp"
#include "swct/evalkit/dice.hpp"
#include "swct/segkit/cage.hpp"
#include "swct/segkit/region_grow.hpp"
#include "swct/segkit/track.hpp"
#include "swct/segkit/voxelize.hpp"

using namespace swct;
using namespace swct::volcore;
using namespace swct::segkit;
using namespace testutil;

namespace {

Volume3 paint(const Mask& m, int inside, int outside) {
  std::vector<std::int32_t> hu(m.size());
  for (std::size_t v = 0; v < m.size(); ++v) hu[v] = m[v] ? inside : outside;
  return {m.geometry(), std::move(hu)};
}

double dice(const Mask& a, const Mask& b) { return evalkit::dice(a, b).dice; }

// Smooth bright blob with an off-centre bump, so rotation and translation are observable.
std::int32_t blob_hu(const Vec3& p) {
  const double a = (p - Vec3(16, 16, 16)).cwiseQuotient(Vec3(5, 3.5, 2.5)).squaredNorm();
  const double b = (p - Vec3(21, 16, 17)).squaredNorm() / 4.0;
  return static_cast<std::int32_t>(std::lround(-100 + 900 * std::exp(-a) + 400 * std::exp(-b)));
}

// Blob sampled at pose^-1 of every voxel centre (unit spacing, zero origin).
Volume3 blob_volume(const Geometry& g, const RigidPose& pose) {
  const auto inv = pose.inverse();
  std::vector<std::int32_t> hu(g.voxel_count());
  for (std::size_t v = 0; v < hu.size(); ++v) {
    const auto ijk = g.unravel(v);
    hu[v] = blob_hu(inv.apply(Vec3(ijk[0], ijk[1], ijk[2])));
  }
  return {g, std::move(hu)};
}

Volume3 blob_volume(const Geometry& g, const Vec3& shift) {
  RigidPose p;
  p.translation = shift;
  return blob_volume(g, p);
}

}  // namespace

TEST_SUITE("segkit") {

TEST_CASE("growing a uniform ball") {
  const auto g = cube(32);
  const auto ball_mask = ball(g, Vec3(16, 16, 16), 8);
  const auto v = paint(ball_mask, 1500, -1000);
  GrowParams p;
  p.seeds = {{16, 16, 16}};
  p.hu_lo = 1000;
  p.hu_hi = 2000;
  CHECK(region_grow(v, p) == ball_mask);

  auto bad = p;
  bad.seeds = {{1, 1, 1}};
  CHECK_THROWS_NAMED(region_grow(v, bad), "seed_out_of_range");
  bad.seeds = {{40, 1, 1}};
  CHECK_THROWS_NAMED(region_grow(v, bad), "seed_outside_volume");
  bad = p;
  bad.hu_lo = 3000;
  CHECK_THROWS_NAMED(region_grow(v, bad), "invalid_range");
  bad = p;
  bad.seeds.clear();
  CHECK_THROWS_NAMED(region_grow(v, bad), "no_seeds");
  bad = p;
  bad.connectivity = 18;
  CHECK_THROWS_NAMED(region_grow(v, bad), "invalid_connectivity");

  // Restriction to the left half keeps exactly the intersection.
  const auto left = box(g, {0, 0, 0}, {17, 32, 32});
  auto r = p;
  r.restriction = left;
  const auto half = region_grow(v, r);
  CHECK(half == mask_where(g, [&](std::size_t i) { return ball_mask[i] && left[i]; }));
  r.seeds = {{20, 16, 16}};
  CHECK_THROWS_NAMED(region_grow(v, r), "seed_outside_restriction");

  auto capped = p;
  capped.max_voxels = count_nonzero(ball_mask) - 1;
  CHECK_THROWS_NAMED(region_grow(v, capped), "growth_cap_exceeded");
  capped.max_voxels += 1;
  CHECK(region_grow(v, capped) == ball_mask);
}

TEST_CASE("growth is order invariant and a fixed point") {
  const auto g = cube(24);
  std::mt19937 rng(9);
  std::vector<std::int32_t> hu(g.voxel_count());
  for (auto& h : hu) h = std::uniform_int_distribution<int>(0, 100)(rng);
  const Volume3 v(g, hu);
  GrowParams p;
  p.hu_lo = 0;
  p.hu_hi = 60;
  for (int i = 0; i < 40; ++i) {
    const Index3 s{std::uniform_int_distribution<int>(0, 23)(rng), std::uniform_int_distribution<int>(0, 23)(rng),
                   std::uniform_int_distribution<int>(0, 23)(rng)};
    if (v.at(s[0], s[1], s[2]) <= 60) p.seeds.push_back(s);
  }
  REQUIRE(p.seeds.size() >= 5);
  for (int conn : {6, 26}) {
    p.connectivity = conn;
    const auto a = region_grow(v, p);
    auto rev = p;
    std::reverse(rev.seeds.begin(), rev.seeds.end());
    CHECK(region_grow(v, rev) == a);

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i]) members.push_back(i);
    auto again = p;
    again.seeds.clear();
    for (std::size_t i = 0; i < members.size(); i += 97) again.seeds.push_back(g.unravel(members[i]));
    const auto b = region_grow(v, again);
    CHECK(count_nonzero(b) <= count_nonzero(a));
    for (std::size_t i = 0; i < a.size(); ++i)
      if (b[i] && !a[i]) FAIL("regrowth left the original region");
    auto whole = p;
    whole.seeds.clear();
    for (auto m : members) whole.seeds.push_back(g.unravel(m));
    CHECK(region_grow(v, whole) == a);
  }
}

TEST_CASE("rigid resampling") {
  const auto g = cube(20, 0.5);
  const auto m = box(g, {5, 6, 7}, {12, 11, 13});
  for (auto mode : {Resample::nearest, Resample::smooth}) CHECK(apply_rigid(m, RigidPose::identity(), mode) == m);

  RigidPose shift;
  shift.translation = Vec3(0.5, 0, 0);
  CHECK(apply_rigid(m, shift) == box(g, {6, 6, 7}, {13, 11, 13}));
  const auto edge = box(g, {15, 0, 0}, {20, 4, 4});
  CHECK(count_nonzero(apply_rigid(edge, shift)) == 4 * 4 * 4);

  const auto g2 = cube(24);
  const auto blob = ball(g2, Vec3(11.3, 12.1, 11.8), 6.2);
  const auto pose = RigidPose::about_pivot(Vec3(7, -4, 11), Vec3(0.7, -1.3, 0.4), Vec3(12, 12, 12));
  for (auto mode : {Resample::nearest, Resample::smooth}) {
    const auto back = apply_rigid(apply_rigid(blob, pose, mode), pose.inverse(), mode);
    CHECK(dice(back, blob) >= 0.95);
  }
  CHECK(count_nonzero(apply_rigid(blob, pose, Resample::smooth)) == count_nonzero(blob));
}

TEST_CASE("pose algebra") {
  const auto p = RigidPose::about_pivot(Vec3(10, 20, -30), Vec3(1, 2, 3), Vec3(4, 5, 6));
  p.validate();
  CHECK((p.apply(Vec3(4, 5, 6)) - Vec3(5, 7, 9)).norm() < 1e-12);
  const auto inv = p.inverse();
  CHECK((inv.apply(p.apply(Vec3(-3, 8, 1))) - Vec3(-3, 8, 1)).norm() < 1e-12);
  CHECK(rotation_angle_deg(p.rotation, p.rotation) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(rotation_angle_deg(euler_xyz(Vec3(0, 0, 0.1)), Mat3::Identity()) == doctest::Approx(0.1 * 180 / std::numbers::pi));
  RigidPose bad;
  bad.rotation(0, 0) = -1;
  CHECK_THROWS_NAMED(bad.validate(), "invalid_pose");
}

TEST_CASE("tracking a static sequence yields the identity") {
  const auto g = cube(32);
  const auto v = blob_volume(g, Vec3::Zero());
  const auto tmpl = mask_where(g, [&](std::size_t i) { return v[i] > 300; });
  const auto frames = track_rigid([&](std::size_t) -> const Volume3& { return v; }, 3, tmpl);
  REQUIRE(frames.size() == 3);
  for (const auto& f : frames) {
    CHECK(f.pose.translation.norm() < 1e-12);
    CHECK(rotation_angle_deg(f.pose.rotation, Mat3::Identity()) < 1e-9);
    CHECK(f.mask == tmpl);
  }
  CHECK(tracking_objective(v, v, tmpl, RigidPose::identity()) == 0.0);
  CHECK_THROWS_NAMED(track_rigid([&](std::size_t) -> const Volume3& { return v; }, 2, Mask(g, 0)), "empty_template");
}

TEST_CASE("tracking a translated and rotated blob") {
  const auto g = cube(32);
  const std::vector<Vec3> shifts{Vec3::Zero(), Vec3(0, 1.5, 2.25), Vec3(0.5, 3, 4.5)};
  std::vector<Volume3> vols;
  for (const auto& s : shifts) vols.push_back(blob_volume(g, s));
  const auto tmpl = mask_where(g, [&](std::size_t i) { return vols[0][i] > 300; });
  TrackParams tp;
  tp.jobs = 2;
  const auto frames = track_rigid([&](std::size_t t) -> const Volume3& { return vols[t]; }, 3, tmpl, tp);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& f = frames[t];
    CHECK((f.pose.translation - shifts[t]).norm() < 0.5);
    const Mat3 rtr = f.pose.rotation.transpose() * f.pose.rotation;
    CHECK((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(f.pose.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t h = 1; h < f.history.size(); ++h) CHECK(f.history[h] <= f.history[h - 1]);
  }

  // A rotated copy is recovered to within a degree.
  const auto turned = RigidPose::about_pivot(Vec3(0, 0, 6), Vec3(0.5, 0, 0), *mask_centroid(tmpl));
  const auto rot = blob_volume(g, turned);
  const auto rf = track_rigid([&](std::size_t t) -> const Volume3& { return t ? rot : vols[0]; }, 2, tmpl);
  CHECK(rotation_angle_deg(rf[1].pose.rotation, turned.rotation) < 1.0);
  CHECK((rf[1].pose.translation - turned.translation).norm() < 0.5);

  TrackParams bad;
  bad.search_radius_vox = -1;
  CHECK_THROWS_NAMED(bad.validate(), "invalid_track_params");
}

TEST_CASE("cage binding weights") {
  const auto c = Cage::regular({4, 4, 4}, Vec3(0, 0, 0), Vec3(30, 30, 30));
  TriMesh m;
  m.vertices = {Vec3(10, 20, 0), Vec3(5, 5, 5), Vec3(30, 30, 30), Vec3(0, 0, 0)};
  m.triangles = {{0, 1, 2}, {1, 2, 3}};
  const auto b = cage_bind(m, c);
  {
    const auto corners = cell_corners(c, b.vertices[0].cell);
    for (int k = 0; k < 8; ++k) {
      const bool node = corners[k] == c.node_index(1, 2, 0);
      CHECK(b.vertices[0].weights[k] == doctest::Approx(node ? 1.0 : 0.0));
    }
  }
  for (double w : b.vertices[1].weights) CHECK(w == doctest::Approx(0.125));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 30);
  TriMesh cloud;
  for (int i = 0; i < 1000; ++i) cloud.vertices.push_back(Vec3(u(rng), u(rng), u(rng)));
  const auto cb = cage_bind(cloud, c);
  double worst = 0;
  for (const auto& vb : cb.vertices) {
    double sum = 0;
    for (double w : vb.weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  CHECK(worst < 1e-9);

  TriMesh outside;
  outside.vertices = {Vec3(31, 0, 0)};
  CHECK_THROWS_NAMED(cage_bind(outside, c), "vertex_outside_cage");
}

TEST_CASE("cage deformation") {
  auto c = Cage::regular({3, 4, 5}, Vec3(-10, -10, -10), Vec3(10, 14, 22));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(-10, 10), uy(-10, 14), uz(-10, 22);
  TriMesh m;
  for (int i = 0; i < 200; ++i) m.vertices.push_back(Vec3(ux(rng), uy(rng), uz(rng)));
  const auto b = cage_bind(m, c);

  auto same = cage_deform(b, c);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((same.vertices[i] - m.vertices[i]).norm() < 1e-6);

  auto moved = c;
  for (auto& p : moved.displaced) p += Vec3(1, 2, 3);
  auto shifted = cage_deform(b, moved);
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    CHECK((shifted.vertices[i] - m.vertices[i] - Vec3(1, 2, 3)).norm() < 1e-6);

  // One corner moves its own node fully and the opposite corner not at all.
  auto one = Cage::regular({2, 2, 2}, Vec3(0, 0, 0), Vec3(10, 10, 10));
  TriMesh corners;
  corners.vertices = {Vec3(0, 0, 0), Vec3(10, 10, 10)};
  const auto cb = cage_bind(corners, one);
  one.displaced[one.node_index(0, 0, 0)] += Vec3(10, 0, 0);
  const auto out = cage_deform(cb, one);
  CHECK((out.vertices[0] - Vec3(10, 0, 0)).norm() < 1e-9);
  CHECK((out.vertices[1] - Vec3(10, 10, 10)).norm() < 1e-9);

  // Points straddling an interior face land in different cells yet agree.
  for (auto& p : moved.displaced) p += Vec3(ux(rng), uy(rng), uz(rng)) * 0.1;
  TriMesh face;
  for (int i = 0; i < 50; ++i) {
    const Vec3 p(0.0, uy(rng), uz(rng));
    face.vertices.push_back(p - Vec3(1e-9, 0, 0));
    face.vertices.push_back(p + Vec3(1e-9, 0, 0));
  }
  const auto fb = cage_bind(face, c);
  CHECK(fb.vertices[0].cell[0] != fb.vertices[1].cell[0]);
  const auto fd = cage_deform(fb, moved);
  for (std::size_t i = 0; i < face.vertices.size(); i += 2) CHECK((fd.vertices[i] - fd.vertices[i + 1]).norm() < 1e-6);

  const auto other = Cage::regular({4, 4, 5}, Vec3(-10, -10, -10), Vec3(10, 14, 22));
  CHECK_THROWS_NAMED(cage_deform(b, other), "cage_mismatch");
}

TEST_CASE("cage validation and json") {
  auto c = Cage::regular({2, 3, 2}, Vec3(0, 0, 0), Vec3(1, 2, 3));
  c.displaced[4] += Vec3(0.25, 0, 0);
  const auto back = cage_from_json(cage_to_json(c));
  CHECK(back.dims == c.dims);
  CHECK(back.rest == c.rest);
  CHECK(back.displaced == c.displaced);

  auto bad = c;
  bad.dims = {1, 3, 2};
  CHECK_THROWS_NAMED(bad.validate(), "invalid_cage");
  bad = c;
  bad.rest[1].x() = -1;
  CHECK_THROWS_NAMED(bad.validate(), "invalid_cage");
  bad = c;
  bad.displaced.pop_back();
  CHECK_THROWS_NAMED(bad.validate(), "invalid_cage");
}

TEST_CASE("voxelizing meshes") {
  const auto g = cube(56);
  const double r = 20;
  const auto sphere = make_uv_sphere(Vec3(27.5, 27.5, 27.5), r);
  REQUIRE(is_watertight(sphere));
  const double expected = 4.0 / 3.0 * std::numbers::pi * r * r * r;
  CHECK(std::abs(double(count_nonzero(voxelize(sphere, g))) - expected) / expected < 0.02);

  CHECK(count_nonzero(voxelize(make_uv_sphere(Vec3(200, 0, 0), 10), g)) == 0);

  auto open = sphere;
  open.triangles.pop_back();
  CHECK_FALSE(is_watertight(open));
  CHECK_THROWS_NAMED(voxelize(open, g), "mesh_not_watertight");

  // Point parity agrees with the analytic sign away from the facet band.
  const Vec3 c(1, 2, 3);
  const auto s = make_uv_sphere(c, 10);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-15, 15);
  int tested = 0;
  while (tested < 1000) {
    const Vec3 p = c + Vec3(u(rng), u(rng), u(rng));
    const double d = (p - c).norm() - 10;
    if (std::abs(d) < 0.1) continue;
    CHECK(point_in_mesh(s, p) == (d < 0));
    ++tested;
  }
}

TEST_CASE("mesh utilities") {
  const auto dir = scratch("trimesh");
  const auto s = make_uv_sphere(Vec3(1, 2, 3), 5, 12, 24);
  validate_mesh(s);
  CHECK(enclosed_volume(s) > 0);
  CHECK(surface_area(s) == doctest::Approx(4 * std::numbers::pi * 25).epsilon(0.05));
  write_obj(s, dir / "s.obj");
  const auto back = read_obj(dir / "s.obj");
  REQUIRE(back.vertices.size() == s.vertices.size());
  CHECK(back.triangles == s.triangles);
  for (std::size_t i = 0; i < s.vertices.size(); ++i) CHECK((back.vertices[i] - s.vertices[i]).norm() < 1e-6);

  TriMesh bad;
  bad.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  bad.triangles = {{0, 1, 2}};
  CHECK_THROWS_NAMED(validate_mesh(bad), "invalid_mesh");
  bad.triangles = {{0, 1, 3}};
  CHECK_THROWS_NAMED(validate_mesh(bad), "invalid_mesh");
}

}
