#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "swct/evalkit/dice.hpp"
#include "swct/meshviz/mesh_export.hpp"
#include "swct/meshviz/motion.hpp"
#include "swct/segkit/voxelize.hpp"

using namespace swct;
using namespace swct::volcore;
using namespace swct::meshviz;
using namespace testutil;

namespace {

constexpr double kPi = std::numbers::pi;

LabelMap coded(const Mask& m, RegionCode r, const LabelMap* under = nullptr) {
  std::vector<std::uint8_t> codes(m.size(), 0);
  for (std::size_t v = 0; v < m.size(); ++v) codes[v] = m[v] ? static_cast<std::uint8_t>(r) : (under ? (*under)[v] : 0);
  return {m.geometry(), std::move(codes)};
}

// Bar along x with two posterior horns; each horn is lifted by its own dz
// (voxels). `drop_left` removes everything left of the midline.
LabelMap hyoid_frame(const Geometry& g, int dz_left, int dz_right, bool drop_left = false) {
  auto bar = box(g, {8, 20, 14}, {32, 24, 18});
  const auto left = box(g, {8, 10, 14 + dz_left}, {12, 20, 18 + dz_left});
  const auto right = box(g, {28, 10, 14 + dz_right}, {32, 20, 18 + dz_right});
  return coded(mask_where(g, [&](std::size_t v) {
                 if (drop_left && g.unravel(v)[0] < 20) return false;
                 return bar[v] || left[v] || right[v];
               }),
               RegionCode::hyoid);
}

}  // namespace

TEST_SUITE("meshviz") {

TEST_CASE("marching cubes basics") {
  const auto g = cube(16);
  CHECK(marching_cubes(Mask(g, 0)).empty());

  const auto m = marching_cubes(box(g, {0, 0, 0}, {16, 16, 16}), RegionCode::mandible);
  CHECK(m.region == RegionCode::mandible);
  CHECK(segkit::is_watertight(m));
  segkit::validate_mesh(m);
}

TEST_CASE("sphere surface and volume") {
  const auto g = cube(56, 0.5);
  const double r = 20;
  const auto s = ball(g, Vec3(27.5, 27.5, 27.5), r);
  for (auto sm : {Smoothing::none, Smoothing::box, Smoothing::binomial}) {
    const auto m = marching_cubes(s, RegionCode::bolus, sm);
    CHECK(segkit::is_watertight(m));
    const double rmm = r * 0.5;
    if (sm != Smoothing::none) CHECK(std::abs(segkit::surface_area(m) / (4 * kPi * rmm * rmm) - 1) < 0.03);
    const double voxel_volume = double(count_nonzero(s)) * 0.125;
    CHECK(std::abs(segkit::enclosed_volume(m) / voxel_volume - 1) < 0.05);
  }
}

TEST_CASE("every closed component stays watertight") {
  const auto g = cube(24);
  std::mt19937 rng(21);
  std::vector<std::uint8_t> v(g.voxel_count(), 0);
  for (int k = 2; k < 22; ++k)
    for (int j = 2; j < 22; ++j)
      for (int i = 2; i < 22; ++i) v[g.linear(i, j, k)] = std::bernoulli_distribution(0.45)(rng);
  const Mask noisy(g, v);
  for (auto sm : {Smoothing::none, Smoothing::box, Smoothing::binomial}) CHECK(segkit::is_watertight(marching_cubes(noisy, RegionCode::tongue, sm)));
}

TEST_CASE("mesh and voxelize round trip") {
  const auto g = cube(40);
  const std::vector<Mask> shapes{box(g, {12, 12, 12}, {28, 28, 28}), ball(g, Vec3(20, 20, 20), 10),
                                 mask_where(g, [&](std::size_t i) {
                                   const auto p = g.unravel(i);
                                   return (Vec3(p[0], p[1], p[2]) - Vec3(20, 19, 21)).cwiseQuotient(Vec3(14, 9, 7)).squaredNorm() <= 1;
                                 })};
  for (const auto& s : shapes) CHECK(evalkit::dice(segkit::voxelize(marching_cubes(s), g), s).dice >= 0.98);
}

TEST_CASE("mesh sequence export") {
  const auto dir = scratch("mesh_export");
  const auto g = cube(20, 0.5);
  const auto tongue = box(g, {2, 2, 2}, {10, 10, 10});
  const auto hyoid = box(g, {12, 12, 12}, {16, 16, 16});
  const auto only_tongue = coded(tongue, RegionCode::tongue);
  const auto both = coded(hyoid, RegionCode::hyoid, &only_tongue);
  const std::vector<LabelMap> labels{both, only_tongue};
  const auto ms = extract_mesh_sequence(labels, {RegionCode::tongue, RegionCode::hyoid}, 0.1, 2);
  export_mesh_sequence(ms, dir);

  int objs = 0;
  for (const auto& e : fs::directory_iterator(dir)) objs += e.path().extension() == ".obj";
  CHECK(objs == 3);
  CHECK(mesh_file_name(1, RegionCode::hyoid) == "f001_hyoid.obj");
  CHECK_FALSE(fs::exists(dir / "f001_hyoid.obj"));

  const auto idx = nlohmann::json::parse(slurp(dir / "sequence.json"));
  CHECK(idx.dump().find("null") != std::string::npos);

  const auto back = segkit::read_obj(dir / "f000_tongue.obj");
  const auto& orig = ms.frames[0][0];
  REQUIRE(back.vertices.size() == orig.vertices.size());
  for (std::size_t i = 0; i < orig.vertices.size(); ++i) CHECK((back.vertices[i] - orig.vertices[i]).norm() < 1e-6);
  CHECK(back.triangles == orig.triangles);

  // Four meshes from two frames and two regions present in both.
  const auto dir4 = scratch("mesh_export4");
  export_mesh_sequence(extract_mesh_sequence({both, both}, {RegionCode::tongue, RegionCode::hyoid}, 0.1), dir4);
  objs = 0;
  for (const auto& e : fs::directory_iterator(dir4)) objs += e.path().extension() == ".obj";
  CHECK(objs == 4);
  CHECK(fs::exists(dir4 / "sequence.json"));
}

TEST_CASE("centroid trajectories") {
  const auto g = cube(20, 0.5);
  const auto m = coded(box(g, {4, 4, 4}, {8, 10, 12}), RegionCode::bolus);
  const auto t = centroid_trajectory({m, m, m}, RegionCode::bolus);
  REQUIRE(t.centroid_mm.size() == 3);
  for (const auto& c : t.centroid_mm) CHECK(c->isApprox(Vec3(2.75, 3.25, 3.75)));

  const auto none = centroid_trajectory({m, m}, RegionCode::hyoid);
  CHECK(none.centroid_mm.size() == 2);
  CHECK_FALSE(none.centroid_mm[0].has_value());
  CHECK_FALSE(none.centroid_mm[1].has_value());
  CHECK(trace_to_json(none).find("null") != std::string::npos);
}

TEST_CASE("horn asymmetry") {
  const auto g = cube(40);
  const std::vector<LabelMap> frames{hyoid_frame(g, 0, 0), hyoid_frame(g, 3, 1), hyoid_frame(g, 2, 2),
                                     hyoid_frame(g, 2, 2, true)};
  const auto t = horn_asymmetry(frames);
  REQUIRE(t.asymmetry_mm.size() == 4);
  CHECK(*t.asymmetry_mm[0] == doctest::Approx(0.0));
  CHECK(*t.asymmetry_mm[1] == doctest::Approx(2.0));
  CHECK(*t.asymmetry_mm[2] == doctest::Approx(0.0));
  CHECK_FALSE(t.left_z_mm[3].has_value());
  CHECK(t.right_z_mm[3].has_value());
  CHECK_FALSE(t.asymmetry_mm[3].has_value());

  // Other regions do not change the result.
  std::vector<LabelMap> noisy;
  for (const auto& f : frames) {
    std::vector<std::uint8_t> codes(f.voxels().begin(), f.voxels().end());
    for (std::size_t v = 0; v < codes.size(); v += 7)
      if (codes[v] != 6) codes[v] = static_cast<std::uint8_t>(1 + v % 5);
    noisy.emplace_back(g, std::move(codes));
  }
  CHECK(trace_to_json(motion_trace(noisy, RegionCode::hyoid, 0.1)) == trace_to_json(motion_trace(frames, RegionCode::hyoid, 0.1)));

  CHECK_THROWS_NAMED(horn_asymmetry({LabelMap(g, 0), frames[0]}), "empty_hyoid");
}

}
