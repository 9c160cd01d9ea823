#include "swct/segkit/region_grow.hpp"

#include <string>

namespace swct::segkit {

namespace {

std::string fmt_index(const Index3& s) {
  return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) + ")";
}

}  // namespace

void GrowParams::validate() const {
  if (seeds.empty()) throw DataError("no_seeds", "region growing needs at least one seed");
  if (hu_lo > hu_hi) throw DataError("invalid_range", "HU range lower bound exceeds upper bound");
  if (connectivity != 6 && connectivity != 26)
    throw DataError("invalid_connectivity", "connectivity must be 6 or 26");
  if (max_voxels == 0) throw DataError("invalid_cap", "max_voxels must be positive");
}

Mask region_grow(const Volume3& v, const GrowParams& p) {
  p.validate();
  const auto& g = v.geometry();
  if (p.restriction) volcore::require_same_geometry(g, p.restriction->geometry(), "restriction mask");

  auto admissible = [&](std::size_t idx) {
    const auto hu = v[idx];
    return hu >= p.hu_lo && hu <= p.hu_hi && (!p.restriction || (*p.restriction)[idx] != 0);
  };

  std::vector<std::uint8_t> out(g.voxel_count(), 0);
  std::vector<std::size_t> stack;
  std::size_t count = 0;
  for (const auto& s : p.seeds) {
    if (!g.contains(s[0], s[1], s[2]))
      throw DataError("seed_outside_volume", "seed " + fmt_index(s) + " lies outside the volume");
    const auto idx = g.linear(s[0], s[1], s[2]);
    const auto hu = v[idx];
    if (hu < p.hu_lo || hu > p.hu_hi)
      throw DataError("seed_out_of_range", "seed " + fmt_index(s) + " has HU " + std::to_string(hu) +
                                               " outside [" + std::to_string(p.hu_lo) + ", " +
                                               std::to_string(p.hu_hi) + "]");
    if (p.restriction && (*p.restriction)[idx] == 0)
      throw DataError("seed_outside_restriction", "seed " + fmt_index(s) + " lies outside the restriction mask");
    if (!out[idx]) {
      out[idx] = 1;
      ++count;
      stack.push_back(idx);
    }
  }

  std::vector<Index3> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (p.connectivity == 6 && manhattan != 1) continue;
        offsets.push_back({dx, dy, dz});
      }

  while (!stack.empty()) {
    const auto idx = stack.back();
    stack.pop_back();
    const auto c = g.unravel(idx);
    for (const auto& o : offsets) {
      const int i = c[0] + o[0], j = c[1] + o[1], k = c[2] + o[2];
      if (!g.contains(i, j, k)) continue;
      const auto n = g.linear(i, j, k);
      if (out[n] || !admissible(n)) continue;
      out[n] = 1;
      if (++count > p.max_voxels)
        throw AlgorithmError("growth_cap_exceeded",
                             "region exceeded " + std::to_string(p.max_voxels) +
                                 " voxels; the HU window probably leaks into a neighbouring structure");
      stack.push_back(n);
    }
  }
  return Mask(g, std::move(out));
}

}  // namespace swct::segkit
