#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::meshviz {

/// Per-frame motion of one region. Absent values mark empty frames/sides.
struct MotionTrace {
  volcore::RegionCode region = volcore::RegionCode::background;
  double frame_interval_s = 0.1;
  std::vector<std::optional<Vec3>> centroid_mm;
  /// Hyoid only: greater-horn landmark heights (z, mm) and |dz_left - dz_right|.
  std::vector<std::optional<double>> left_z_mm;
  std::vector<std::optional<double>> right_z_mm;
  std::vector<std::optional<double>> asymmetry_mm;
};

/// Voxel-centre centroid of `region` in every frame.
MotionTrace centroid_trajectory(const std::vector<volcore::LabelMap>& labels, volcore::RegionCode region,
                                double frame_interval_s = 0.1);

/// Splits the region at the sagittal plane (x) through its frame-0 centroid;
/// per side the landmark is the centroid of the most posterior (smallest y)
/// tenth of the voxels. Left is -x. Throws DataError("empty_hyoid") when the
/// region is empty in frame 0.
MotionTrace horn_asymmetry(const std::vector<volcore::LabelMap>& labels,
                           volcore::RegionCode region = volcore::RegionCode::hyoid, double frame_interval_s = 0.1);

/// centroid_trajectory plus, for the hyoid, horn_asymmetry.
MotionTrace motion_trace(const std::vector<volcore::LabelMap>& labels, volcore::RegionCode region,
                         double frame_interval_s);

/// `{ "region": code, "frame_interval_s": x, "centroid_mm": [...], "asymmetry_mm": [...], ... }`
std::string trace_to_json(const MotionTrace& t);
void write_trace(const MotionTrace& t, const std::filesystem::path& path);

}  // namespace swct::meshviz
