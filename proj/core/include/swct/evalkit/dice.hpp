#pragma once

#include <cstddef>

#include "swct/volcore/volume.hpp"

namespace swct::evalkit {

struct DiceResult {
  double dice = 1.0;
  std::size_t intersection = 0;
  std::size_t a_voxels = 0;
  std::size_t b_voxels = 0;
  bool both_empty = true;  // dice is reported as 1.0 in that case
};

/// 2|A∩B| / (|A|+|B|) over nonzero voxels, with exact integer counts.
/// Throws DataError("geometry_mismatch").
DiceResult dice(const volcore::Mask& a, const volcore::Mask& b);

/// Same as dice(extract_region(gt, r), extract_region(pred, r)) without the copies.
DiceResult dice_region(const volcore::LabelMap& gt, const volcore::LabelMap& pred, volcore::RegionCode r);

}  // namespace swct::evalkit
