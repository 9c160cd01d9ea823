#include "swct/evalkit/baseline.hpp"

#include <algorithm>
#include <limits>

#include "swct/evalkit/dice.hpp"
#include "swct/segkit/region_grow.hpp"
#include "swct/segkit/track.hpp"
#include "swct/volcore/nrrd.hpp"
#include "swct/volcore/parallel.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::evalkit {

namespace fs = std::filesystem;
using volcore::LabelMap;
using volcore::Mask;
using volcore::RegionCode;

namespace {

constexpr std::uint8_t kStaticBones[] = {3, 4, 5};
constexpr std::uint8_t kTracked[] = {6, 7};
constexpr std::uint8_t kCarried[] = {1, 2, 8};
constexpr std::int32_t kBolusLo = 1000, kBolusHi = 2000;

bool is_bone(std::uint8_t c) { return c >= 3 && c <= 7; }

// 26-neighbourhood dilation by one voxel.
std::vector<std::uint8_t> dilate(const volcore::Geometry& g, const std::vector<std::uint8_t>& m) {
  std::vector<std::uint8_t> out(m.size(), 0);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        if (!m[g.linear(i, j, k)]) continue;
        for (int dk = -1; dk <= 1; ++dk)
          for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
              if (g.contains(i + di, j + dj, k + dk)) out[g.linear(i + di, j + dj, k + dk)] = 1;
      }
  return out;
}

}  // namespace

int estimate_bone_threshold(const std::vector<fs::path>& train_cases) {
  constexpr int kLo = 100, kHi = 1200, kStep = 10;
  const int n_cand = (kHi - kLo) / kStep + 1;
  std::vector<double> score(n_cand, 0.0);
  int used = 0;
  for (const auto& dir : train_cases) {
    const auto m = volcore::read_manifest(dir);
    if (m.frames.empty() || !m.frames[0].labels) continue;
    const auto vol = volcore::load_volume(volcore::resolve(dir, m.frames[0].volume));
    const auto lab = volcore::load_labels(volcore::resolve(dir, *m.frames[0].labels));
    const auto& g = vol.geometry();
    std::vector<std::uint8_t> bone(g.voxel_count());
    std::size_t n_bone = 0;
    for (std::size_t v = 0; v < bone.size(); ++v) {
      bone[v] = is_bone(lab[v]);
      n_bone += bone[v];
    }
    if (n_bone == 0) continue;
    const auto near = dilate(g, bone);
    std::vector<std::pair<std::int32_t, bool>> samples;
    for (std::size_t v = 0; v < bone.size(); ++v)
      if (near[v]) samples.emplace_back(vol[v], bone[v] != 0);
    for (int c = 0; c < n_cand; ++c) {
      const int t = kLo + c * kStep;
      std::size_t tp = 0, fp = 0;
      for (const auto& [hu, b] : samples)
        if (hu >= t) (b ? tp : fp) += 1;
      score[c] += 2.0 * tp / static_cast<double>(tp + fp + n_bone);
    }
    ++used;
  }
  if (used == 0) return 420;
  const auto best = std::max_element(score.begin(), score.end()) - score.begin();
  return kLo + static_cast<int>(best) * kStep;
}

std::vector<LabelMap> predict_baseline(const std::vector<fs::path>& train_cases, const fs::path& test_case, int jobs) {
  const int threshold = estimate_bone_threshold(train_cases);
  const auto seq = volcore::load_case(test_case, jobs);
  if (seq.frames.empty() || !seq.frames[0].labels)
    throw DataError("missing_labels", "the baseline needs frame-0 labels of the test case");
  const auto& g = seq.geometry();
  const auto& gt0 = *seq.frames[0].labels;
  const std::size_t n = seq.frame_count();
  const std::size_t nvox = g.voxel_count();

  std::vector<std::vector<std::uint8_t>> out(n, std::vector<std::uint8_t>(nvox, 0));

  for (auto code : kCarried)
    for (std::size_t v = 0; v < nvox; ++v)
      if (gt0[v] == code)
        for (auto& o : out) o[v] = code;

  for (auto code : kStaticBones) {
    std::vector<std::uint8_t> r0(nvox);
    bool any = false;
    for (std::size_t v = 0; v < nvox; ++v) any |= (r0[v] = gt0[v] == code) != 0;
    if (!any) continue;
    const auto near = dilate(g, r0);
    parallel_for(n, jobs, [&](std::size_t f) {
      const auto& vol = seq.frames[f].volume;
      for (std::size_t v = 0; v < nvox; ++v)
        if (near[v] && vol[v] >= threshold) out[f][v] = code;
    });
  }

  for (auto code : kTracked) {
    const auto tpl = volcore::extract_region(gt0, static_cast<RegionCode>(code));
    if (volcore::count_nonzero(tpl) == 0) continue;
    segkit::TrackParams tp;
    tp.jobs = jobs;
    const auto tracked = segkit::track_rigid([&](std::size_t f) -> const volcore::Volume3& { return seq.frames[f].volume; },
                                             n, tpl, tp);
    for (std::size_t f = 0; f < n; ++f) {
      const auto& m = tracked[f].mask;
      for (std::size_t v = 0; v < nvox; ++v)
        if (m[v]) out[f][v] = code;
    }
  }

  if (auto c = volcore::mask_centroid(volcore::extract_region(gt0, RegionCode::bolus))) {
    Vec3 prev = volcore::world_to_index(g, *c);
    for (std::size_t f = 0; f < n; ++f) {
      const auto& vol = seq.frames[f].volume;
      double best = std::numeric_limits<double>::infinity();
      std::size_t seed = nvox;
      for (std::size_t v = 0; v < nvox; ++v) {
        if (vol[v] < kBolusLo || vol[v] > kBolusHi) continue;
        const auto ijk = g.unravel(v);
        const double d = (Vec3(ijk[0], ijk[1], ijk[2]) - prev).squaredNorm();
        if (d < best) {
          best = d;
          seed = v;
        }
      }
      if (seed == nvox) continue;
      segkit::GrowParams gp;
      gp.seeds = {g.unravel(seed)};
      gp.hu_lo = kBolusLo;
      gp.hu_hi = kBolusHi;
      try {
        const auto m = segkit::region_grow(vol, gp);
        for (std::size_t v = 0; v < nvox; ++v)
          if (m[v]) out[f][v] = 9;
        if (auto cm = volcore::mask_centroid(m)) prev = volcore::world_to_index(g, *cm);
      } catch (const AlgorithmError&) {
        // leak: leave the bolus empty in this frame
      }
    }
  }

  std::vector<LabelMap> labels;
  labels.reserve(n);
  for (auto& o : out) labels.emplace_back(g, std::move(o));
  return labels;
}

void write_predictions(const std::vector<LabelMap>& labels, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t f = 0; f < labels.size(); ++f) volcore::save_labels(labels[f], out_dir / volcore::frame_labels_name(f));
}

}  // namespace swct::evalkit
