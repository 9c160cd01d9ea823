#include <deque>

#include "helpers.hpp"
#include "swct/phantom/phantom.hpp"
#include "swct/segkit/region_grow.hpp"
#include "swct/evalkit/dice.hpp"

using namespace swct;
using namespace swct::volcore;
using namespace testutil;

namespace {

phantom::PhantomConfig small_cfg(int n = 64, int frames = 4) {
  phantom::PhantomConfig c;
  c.dims = {n, n, n};
  c.n_frames = frames;
  return c;
}

Mask hyoid_of(const Frame& f) { return extract_region(*f.labels, RegionCode::hyoid); }

// 6-connected components of `on`.
int components(const Mask& on) {
  const auto& g = on.geometry();
  std::vector<std::uint8_t> seen(on.size(), 0);
  int count = 0;
  for (std::size_t start = 0; start < on.size(); ++start) {
    if (!on[start] || seen[start]) continue;
    ++count;
    std::deque<std::size_t> q{start};
    seen[start] = 1;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop_front();
      const auto ijk = g.unravel(v);
      for (int a = 0; a < 3; ++a)
        for (int s : {-1, 1}) {
          auto n = ijk;
          n[a] += s;
          if (!g.contains(n[0], n[1], n[2])) continue;
          const auto w = g.linear(n[0], n[1], n[2]);
          if (on[w] && !seen[w]) {
            seen[w] = 1;
            q.push_back(w);
          }
        }
    }
  }
  return count;
}

Mask grow_box(const Mask& m, int r) {
  const auto& g = m.geometry();
  Index3 lo = g.dims, hi{0, 0, 0};
  for (std::size_t v = 0; v < m.size(); ++v)
    if (m[v]) {
      const auto ijk = g.unravel(v);
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], ijk[a] - r);
        hi[a] = std::max(hi[a], ijk[a] + r + 1);
      }
    }
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(lo[a], 0);
    hi[a] = std::min(hi[a], g.dims[a]);
  }
  return box(g, lo, hi);
}

}  // namespace

TEST_SUITE("phantom") {

TEST_CASE("generation is deterministic") {
  auto c = small_cfg();
  c.motion_blur = true;
  c.metal_artifact = true;
  const auto a = phantom::generate(c, 1);
  const auto b = phantom::generate(c, 3);
  REQUIRE(a.sequence.frame_count() == 4);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(a.sequence.frames[f].volume == b.sequence.frames[f].volume);
    CHECK(*a.sequence.frames[f].labels == *b.sequence.frames[f].labels);
  }
  c.rng_seed = 43;
  CHECK_FALSE(phantom::generate(c, 1).sequence.frames[0].volume == a.sequence.frames[0].volume);
}

TEST_CASE("zero motion gives identical frames") {
  auto c = small_cfg(64, 6);
  c.hyoid_peak_vox = Vec3::Zero();
  c.tongue_lift_vox = 0;
  c.bolus_travel = 0;
  for (bool blur : {false, true}) {
    c.motion_blur = blur;
    const auto r = phantom::generate(c, 2);
    for (std::size_t f = 1; f < 6; ++f) {
      CHECK(r.sequence.frames[f].volume == r.sequence.frames[0].volume);
      CHECK(*r.sequence.frames[f].labels == *r.sequence.frames[0].labels);
      CHECK(r.truth.hyoid_poses[f].rotation == Mat3::Identity());
      CHECK(r.truth.hyoid_poses[f].translation == Vec3::Zero());
    }
    if (blur) {
      c.motion_blur = false;
      CHECK(phantom::generate(c, 2).sequence.frames[3].volume == r.sequence.frames[3].volume);
    }
  }
}

TEST_CASE("hyoid centroid follows the configured amplitude") {
  phantom::PhantomConfig c;
  c.n_frames = 13;
  const auto r = phantom::generate(c, 2);
  const auto c0 = mask_centroid(hyoid_of(r.sequence.frames[0]));
  const auto c12 = mask_centroid(hyoid_of(r.sequence.frames[12]));
  REQUIRE(c0);
  REQUIRE(c12);
  const Vec3 moved = (*c12 - *c0).cwiseQuotient(c.spacing);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(moved[a] - c.hyoid_peak_vox[a]) < 0.5);
  CHECK((r.truth.hyoid_displacement_vox[12] - c.hyoid_peak_vox).norm() < 1e-9);

  // Thresholding at the bone/soft tissue midpoint recovers the label next to
  // the hyoid, away from the other labelled structures.
  auto quiet = c;
  quiet.hu.noise_sigma = 0;
  quiet.n_frames = 9;
  const auto q = phantom::generate(quiet, 2);
  const int mid = (quiet.hu.bone + quiet.hu.soft_tissue) / 2;
  for (std::size_t f : {0, 5, 8}) {
    const auto& fr = q.sequence.frames[f];
    const auto label = hyoid_of(fr);
    const auto near = grow_box(label, 2);
    const auto thr = mask_where(label.geometry(), [&](std::size_t v) {
      const auto code = (*fr.labels)[v];
      return near[v] && (code <= 1 || code == 6) && fr.volume[v] >= mid;
    });
    CHECK(evalkit::dice(thr, label).dice >= 0.99);
  }
}

TEST_CASE("truth poses are rigid") {
  const auto r = phantom::generate(small_cfg(64, 13), 2);
  const Vec3 p = r.truth.hyoid_pivot_mm;
  const std::vector<Vec3> marks{p, p + Vec3(5, 0, 0), p + Vec3(0, 3, 1), p + Vec3(-4, 2, -2)};
  auto dist = [&](const segkit::RigidPose& pose, int a, int b) { return (pose.apply(marks[a]) - pose.apply(marks[b])).norm(); };
  double worst = 0;
  for (const auto& pose : r.truth.hyoid_poses) {
    pose.validate();
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) worst = std::max(worst, std::abs(dist(pose, a, b) - (marks[a] - marks[b]).norm()));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("motion blur") {
  auto c = small_cfg(96, 4);
  c.motion_blur = true;
  c.blur_samples = 1;
  auto plain = c;
  plain.motion_blur = false;
  const auto one = phantom::generate(c, 2);
  const auto none = phantom::generate(plain, 2);
  for (std::size_t f = 0; f < 4; ++f) CHECK(one.sequence.frames[f].volume == none.sequence.frames[f].volume);

  // Two instants 8 voxels apart leave two separate bright copies.
  c.hyoid_profile = phantom::HyoidProfile::linear;
  c.hyoid_velocity_vox = Vec3(0, 0, 4);
  c.blur_samples = 2;
  c.hu.noise_sigma = 0;
  const auto two = phantom::generate(c, 2);
  const auto early = hyoid_of(two.sequence.frames[1]);
  const auto late = hyoid_of(two.sequence.frames[3]);
  const auto& v = two.sequence.frames[2].volume;
  const auto bright = mask_where(v.geometry(), [&](std::size_t i) { return (early[i] || late[i]) && v[i] > 400; });
  CHECK(components(bright) == 2);
  CHECK(two.truth.hyoid_blur_vox[2] == doctest::Approx(8.0));
}

TEST_CASE("metal artifact") {
  auto c = small_cfg();
  const auto clean = phantom::generate(c, 2).sequence.frames[0];
  const Vec3 site = phantom::default_metal_site(c);

  auto zero = c;
  zero.metal_amplitude = 0;
  CHECK(phantom::add_metal_artifact(clean.volume, site, zero) == clean.volume);

  const auto streaked = phantom::add_metal_artifact(clean.volume, site, c);
  const auto& g = clean.volume.geometry();
  std::size_t changed = 0, outside = 0;
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    if (streaked[v] == clean.volume[v]) continue;
    ++changed;
    if (std::abs(g.origin.z() + g.unravel(v)[2] * g.spacing.z() - site.z()) > 1.0 + 1e-9) ++outside;
  }
  CHECK(changed > 0);
  CHECK(outside == 0);
  CHECK_THROWS_NAMED(phantom::add_metal_artifact(clean.volume, site + Vec3(0, 0, 1000), c), "site_outside_volume");
}

TEST_CASE("metal streaks through the bolus lower its growth Dice") {
  auto c = small_cfg(96, 2);
  c.hu.noise_sigma = 0;
  const auto r = phantom::generate(c, 2);
  const auto& fr = r.sequence.frames[0];
  const auto truth = extract_region(*fr.labels, RegionCode::bolus);
  const Vec3 centre = r.truth.bolus_center_mm[0];
  const auto streaked = phantom::add_metal_artifact(fr.volume, centre, c);

  const Vec3 idx = world_to_index(fr.volume.geometry(), centre);
  segkit::GrowParams p;
  p.seeds = {{int(std::lround(idx.x())), int(std::lround(idx.y())), int(std::lround(idx.z()))}};
  p.hu_lo = 1000;
  p.hu_hi = 2000;
  const double d_clean = evalkit::dice(segkit::region_grow(fr.volume, p), truth).dice;
  const double d_metal = evalkit::dice(segkit::region_grow(streaked, p), truth).dice;
  CHECK(d_metal < d_clean);
}

TEST_CASE("configuration") {
  auto c = small_cfg();
  c.case_id = "cfg";
  c.horn_imbalance = 0.25;
  c.metal_site_mm = Vec3(1, 2, 3);
  const auto back = phantom::config_from_json_text(phantom::config_to_json_text(c));
  CHECK(phantom::config_to_json_text(back) == phantom::config_to_json_text(c));
  CHECK(back.horn_imbalance == 0.25);
  CHECK(*back.metal_site_mm == Vec3(1, 2, 3));

  auto bad = c;
  bad.dims = {31, 64, 64};
  CHECK_THROWS_NAMED(bad.validate(), "invalid_config");
  bad = c;
  bad.n_frames = 1;
  CHECK_THROWS_NAMED(bad.validate(), "invalid_config");
  bad = c;
  bad.exposure_s = 0.25;
  CHECK_THROWS_NAMED(phantom::generate(bad), "invalid_config");
  CHECK_THROWS_NAMED(phantom::config_from_json_text("{\"n_frames\": \"many\"}"), "invalid_config");
}

TEST_CASE("case directory output") {
  const auto dir = scratch("phantom_case");
  const auto c = small_cfg(48, 3);
  const auto r = phantom::generate(c, 1);
  phantom::write_case(r, c, dir, 2);
  CHECK(fs::exists(dir / "truth.json"));
  const auto back = load_case(dir, 1);
  REQUIRE(back.frame_count() == 3);
  CHECK(back.frames[1].volume == r.sequence.frames[1].volume);
  CHECK(*back.frames[2].labels == *r.sequence.frames[2].labels);
  CHECK(validate_sequence(back).ok());
}

}
