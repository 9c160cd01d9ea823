#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::segkit {

using volcore::Mask;
using volcore::Volume3;

/// Seeded growth constrained by an inclusive HU window and, optionally,
/// a spatial restriction mask (both must hold for a voxel to join).
struct GrowParams {
  std::vector<Index3> seeds;
  std::int32_t hu_lo = 0;
  std::int32_t hu_hi = 0;
  std::optional<Mask> restriction;
  int connectivity = 6;  // 6 or 26
  std::size_t max_voxels = 2'000'000;

  void validate() const;
};

/// Connected component(s) of in-window voxels reachable from the seeds.
///
/// Throws DataError("seed_out_of_range") when a seed's HU lies outside the
/// window, DataError("seed_outside_volume") / ("seed_outside_restriction")
/// for misplaced seeds, and AlgorithmError("growth_cap_exceeded") when the
/// region would exceed `max_voxels` (typically a leak through a bridge).
Mask region_grow(const Volume3& v, const GrowParams& p);

}  // namespace swct::segkit
