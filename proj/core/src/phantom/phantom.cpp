#include "swct/phantom/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "scene.hpp"
#include "swct/volcore/parallel.hpp"

namespace swct::phantom {

using namespace detail;

namespace {

constexpr int kSub = 8;  // 2x2x2 supersampling at material boundaries

struct Scratch {
  explicit Scratch(std::size_t n) : mat(n), mat_stamp(n, 0), vox_stamp(n, 0) {}
  std::vector<std::uint8_t> mat;
  std::vector<std::uint32_t> mat_stamp, vox_stamp;
  std::uint32_t stamp = 0;
};

struct VoxelSample {
  std::int32_t sum8;  // sum of the 8 subsample HU values
  std::uint8_t label;
};

std::uint8_t label_from_counts(const std::array<int, kMaterialCount>& n) {
  if (n[kBolus] >= 7) return 9;
  for (Material m : {kMandible, kVertebra, kTongue})
    if (n[m] >= 5) return Scene::label_of(m);
  return 0;
}

// Renders every voxel inside `boxes` once, calling fn(linear index, sample).
template <typename Fn>
void render(const Scene& sc, const HuPalette& hu, const std::vector<Box>& boxes, const InstantState* st,
            Scratch& s, Fn&& fn) {
  const auto& g = sc.geometry();
  ++s.stamp;
  for (const auto& b : boxes) {
    for (int k = std::max(0, b.lo[2] - 1); k <= std::min(g.dims[2] - 1, b.hi[2] + 1); ++k)
      for (int j = std::max(0, b.lo[1] - 1); j <= std::min(g.dims[1] - 1, b.hi[1] + 1); ++j)
        for (int i = std::max(0, b.lo[0] - 1); i <= std::min(g.dims[0] - 1, b.hi[0] + 1); ++i) {
          const auto v = g.linear(i, j, k);
          if (s.mat_stamp[v] == s.stamp) continue;
          s.mat_stamp[v] = s.stamp;
          s.mat[v] = sc.material(Vec3(i, j, k), st);
        }
  }
  std::array<int, kMaterialCount> counts{};
  for (const auto& b : boxes) {
    for (int k = b.lo[2]; k <= b.hi[2]; ++k)
      for (int j = b.lo[1]; j <= b.hi[1]; ++j)
        for (int i = b.lo[0]; i <= b.hi[0]; ++i) {
          const auto v = g.linear(i, j, k);
          if (s.vox_stamp[v] == s.stamp) continue;
          s.vox_stamp[v] = s.stamp;
          const auto m = static_cast<Material>(s.mat[v]);
          bool uniform = true;
          for (int dk = -1; dk <= 1 && uniform; ++dk)
            for (int dj = -1; dj <= 1 && uniform; ++dj)
              for (int di = -1; di <= 1; ++di) {
                if (!g.contains(i + di, j + dj, k + dk)) continue;
                if (s.mat[g.linear(i + di, j + dj, k + dk)] != m) {
                  uniform = false;
                  break;
                }
              }
          if (uniform) {
            fn(v, VoxelSample{kSub * Scene::hu_of(m, hu), Scene::label_of(m)});
            continue;
          }
          counts.fill(0);
          std::int32_t sum = 0;
          for (int c = 0; c < kSub; ++c) {
            const Vec3 q(i + ((c & 1) ? 0.25 : -0.25), j + ((c & 2) ? 0.25 : -0.25), k + ((c & 4) ? 0.25 : -0.25));
            const auto sm = sc.material(q, st);
            ++counts[sm];
            sum += Scene::hu_of(sm, hu);
          }
          fn(v, VoxelSample{sum, label_from_counts(counts)});
        }
  }
}

std::vector<std::int32_t> noise_field(const PhantomConfig& cfg, std::size_t n) {
  std::vector<std::int32_t> out(n, 0);
  if (cfg.hu.noise_sigma <= 0) return out;
  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> normal(0.0, cfg.hu.noise_sigma);
  for (auto& v : out) v = static_cast<std::int32_t>(std::lround(normal(rng)));
  return out;
}

std::vector<std::int32_t> metal_field(const volcore::Geometry& g, const Vec3& site, double amplitude,
                                      std::uint64_t seed) {
  const Vec3 si = volcore::world_to_index(g, site);
  for (int ax = 0; ax < 3; ++ax)
    if (!(si[ax] >= -0.5 && si[ax] <= g.dims[ax] - 0.5))
      throw DataError("site_outside_volume", "metal artifact site lies outside the volume");
  std::vector<std::int32_t> out(g.voxel_count(), 0);
  if (amplitude == 0.0) return out;

  constexpr int kSpokes = 16;
  constexpr double kHalfWidth = 3.0 * std::numbers::pi / 180.0;
  const double pitch = 2.0 * std::numbers::pi / kSpokes;
  std::mt19937_64 rng(seed ^ 0x6d6574616cULL);
  const double phase = std::uniform_real_distribution<double>(0.0, pitch)(rng);

  for (int k = 0; k < g.dims[2]; ++k) {
    const double z = g.origin.z() + k * g.spacing.z();
    if (std::fabs(z - site.z()) > 1.0) continue;
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const double dx = g.origin.x() + i * g.spacing.x() - site.x();
        const double dy = g.origin.y() + j * g.spacing.y() - site.y();
        const double d = std::hypot(dx, dy);
        if (d < 1e-9) continue;
        const double a = std::atan2(dy, dx) - phase;
        const double spoke = std::round(a / pitch);
        if (std::fabs(a - spoke * pitch) > kHalfWidth) continue;
        const int index = ((static_cast<int>(spoke) % kSpokes) + kSpokes) % kSpokes;
        const double sign = (index % 2 == 0) ? 1.0 : -1.0;
        out[g.linear(i, j, k)] = static_cast<std::int32_t>(std::lround(sign * amplitude / (1.0 + d / 10.0)));
      }
  }
  return out;
}

}  // namespace

void PhantomConfig::validate() const {
  auto bad = [](const std::string& what) { throw DataError("invalid_config", what); };
  for (int ax = 0; ax < 3; ++ax) {
    if (dims[ax] < 32) bad("dims must be at least 32 per axis");
    if (!(spacing[ax] > 0)) bad("spacing must be positive");
  }
  if (n_frames < 2) bad("n_frames must be at least 2");
  if (!(frame_interval_s > 0)) bad("frame_interval_s must be positive");
  if (!(exposure_s >= 0) || exposure_s > 2 * frame_interval_s) bad("exposure_s must lie in [0, 2*frame_interval_s]");
  if (blur_samples < 1) bad("blur_samples must be at least 1");
  if (!(rise_start < rise_end && rise_end <= return_start && return_start < return_end))
    bad("hyoid rise/return frames must be increasing");
  if (!(tongue_start < tongue_end)) bad("tongue frames must be increasing");
  if (!(bolus_start < bolus_end)) bad("bolus frames must be increasing");
  if (!(bolus_travel >= 0 && bolus_travel <= 1)) bad("bolus travel must lie in [0, 1]");
  if (!(horn_imbalance > -1)) bad("horn_imbalance must exceed -1");
  if (!(hu.noise_sigma >= 0)) bad("noise_sigma must be non-negative");
  if (!(metal_amplitude >= 0)) bad("metal_amplitude must be non-negative");
  if (!hyoid_peak_vox.allFinite() || !hyoid_velocity_vox.allFinite()) bad("hyoid motion must be finite");
}

volcore::Geometry PhantomConfig::geometry() const {
  volcore::Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.origin = Vec3::Zero();
  return g;
}

Vec3 default_metal_site(const PhantomConfig& cfg) {
  const Scene sc(cfg);
  return sc.scene_to_world(Vec3(64, 112, 84));
}

volcore::Volume3 add_metal_artifact(const volcore::Volume3& v, const Vec3& site_mm, const PhantomConfig& cfg) {
  const auto field = metal_field(v.geometry(), site_mm, cfg.metal_amplitude, cfg.rng_seed);
  std::vector<std::int32_t> out(v.voxels().begin(), v.voxels().end());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += field[n];
  return volcore::Volume3(v.geometry(), std::move(out));
}

PhantomCase generate(const PhantomConfig& cfg, int jobs) {
  cfg.validate();
  Scene sc(cfg);
  const auto& g = sc.geometry();
  const std::size_t nvox = g.voxel_count();

  // Static anatomy, rendered once.
  std::vector<std::int32_t> static_sum(nvox);
  std::vector<std::uint8_t> static_label(nvox);
  {
    Scratch s(nvox);
    const Box all{{0, 0, 0}, {g.dims[0] - 1, g.dims[1] - 1, g.dims[2] - 1}};
    render(sc, cfg.hu, {all}, nullptr, s, [&](std::size_t v, const VoxelSample& r) {
      static_sum[v] = r.sum8;
      static_label[v] = r.label;
    });
  }

  // Rest hyoid: a voxel joins when at least 5 of its 8 subsamples do. Every
  // frame moves this mask rigidly, so truth poses reproduce the labels exactly.
  std::vector<std::uint8_t> hyoid0(nvox, 0);
  {
    const auto b = sc.hyoid_rest_box();
    for (int k = b.lo[2]; k <= b.hi[2]; ++k)
      for (int j = b.lo[1]; j <= b.hi[1]; ++j)
        for (int i = b.lo[0]; i <= b.hi[0]; ++i) {
          int n = 0;
          for (int c = 0; c < kSub; ++c)
            n += sc.in_hyoid_rest(Vec3(i + ((c & 1) ? 0.25 : -0.25), j + ((c & 2) ? 0.25 : -0.25),
                                       k + ((c & 4) ? 0.25 : -0.25)));
          if (n >= 5) hyoid0[g.linear(i, j, k)] = 1;
        }
  }
  const volcore::Mask hyoid_mask0(g, std::move(hyoid0));
  const auto pivot = volcore::mask_centroid(hyoid_mask0);
  if (!pivot) throw AlgorithmError("empty_hyoid", "hyoid does not cover any voxel at this resolution");
  sc.set_pivot(*pivot);

  const auto noise = noise_field(cfg, nvox);
  PhantomTruth truth;
  truth.hyoid_pivot_mm = *pivot;
  truth.horn_half_width_mm = sc.horn_half_width_mm();
  truth.metal_site_mm = cfg.metal_site_mm.value_or(default_metal_site(cfg));
  std::vector<std::int32_t> metal;
  if (cfg.metal_artifact) metal = metal_field(g, truth.metal_site_mm, cfg.metal_amplitude, cfg.rng_seed);

  const int n = cfg.n_frames;
  const int k_samples = cfg.motion_blur ? cfg.blur_samples : 1;
  const double exposure_frames = cfg.exposure_s / cfg.frame_interval_s;
  auto instant = [&](int frame, int k) {
    if (k_samples == 1) return double(frame);
    return frame + exposure_frames * (double(k) / (k_samples - 1) - 0.5);
  };

  truth.hyoid_poses.resize(n);
  truth.hyoid_displacement_vox.resize(n);
  truth.bolus_center_mm.resize(n);
  truth.tongue_cage.resize(n);
  truth.hyoid_blur_vox.assign(n, 0.0);
  for (int f = 0; f < n; ++f) {
    const auto st = sc.state(f);
    truth.hyoid_poses[f] = st.hyoid;
    truth.hyoid_poses[f].frame_index = f;
    truth.hyoid_displacement_vox[f] = st.hyoid_disp_vox;
    truth.bolus_center_mm[f] = sc.scene_to_world(st.bolus_center);
    truth.tongue_cage[f] = sc.tongue_cage_mm(st.tongue_lift);
    if (k_samples > 1)
      truth.hyoid_blur_vox[f] =
          (sc.state(instant(f, k_samples - 1)).hyoid_disp_vox - sc.state(instant(f, 0)).hyoid_disp_vox).norm();
  }

  PhantomCase out;
  out.sequence.case_id = cfg.case_id;
  out.sequence.frame_interval_s = cfg.frame_interval_s;
  out.sequence.frames.resize(n);
  parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t fi) {
    const int f = static_cast<int>(fi);
    Scratch s(nvox);
    std::vector<std::int32_t> acc(nvox);
    std::vector<float> occupancy(nvox, 0.0f);
    for (std::size_t v = 0; v < nvox; ++v) acc[v] = static_sum[v] * k_samples;
    for (int k = 0; k < k_samples; ++k) {
      const auto st = sc.state(instant(f, k));
      render(sc, cfg.hu, sc.moving_boxes(st), &st, s,
             [&](std::size_t v, const VoxelSample& r) { acc[v] += r.sum8 - static_sum[v]; });
      // Occupancy agrees with the instant's label at the bone/soft tissue midpoint.
      const auto occ = segkit::smooth_occupancy(hyoid_mask0, st.hyoid);
      const auto inside = segkit::apply_rigid(hyoid_mask0, st.hyoid, segkit::Resample::smooth);
      for (std::size_t v = 0; v < nvox; ++v)
        occupancy[v] += inside[v] ? std::max(occ[v], 0.5f) : std::min(occ[v], 0.49f);
    }

    std::vector<std::uint8_t> labels(static_label);
    const auto mid = sc.state(f);
    render(sc, cfg.hu, sc.moving_boxes(mid), &mid, s,
           [&](std::size_t v, const VoxelSample& r) { labels[v] = r.label; });
    const auto hyoid = segkit::apply_rigid(hyoid_mask0, truth.hyoid_poses[f], segkit::Resample::smooth);
    for (std::size_t v = 0; v < nvox; ++v)
      if (hyoid[v] && (labels[v] == 0 || labels[v] == 1)) labels[v] = 6;

    std::vector<std::int32_t> hu(nvox);
    const double denom = double(kSub) * k_samples;
    for (std::size_t v = 0; v < nvox; ++v) {
      const double o = occupancy[v] / k_samples;
      const double base = acc[v] / denom;
      hu[v] = static_cast<std::int32_t>(std::lround(base + o * (cfg.hu.bone - base))) + noise[v];
      if (!metal.empty()) hu[v] += metal[v];
    }
    out.sequence.frames[fi].volume = volcore::Volume3(g, std::move(hu));
    out.sequence.frames[fi].labels = volcore::LabelMap(g, std::move(labels));
  });
  out.truth = std::move(truth);
  return out;
}

}  // namespace swct::phantom
