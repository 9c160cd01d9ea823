#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "swct/meshviz/marching_cubes.hpp"

namespace swct::meshviz {

struct MeshSequence {
  double frame_interval_s = 0.1;
  std::vector<volcore::RegionCode> regions;
  /// frames[f][r] is the mesh of regions[r] at frame f (empty when absent).
  std::vector<std::vector<segkit::TriMesh>> frames;
};

/// Display colour (RGB, 0-255) of a region.
std::array<int, 3> region_color(volcore::RegionCode r);

/// Extracts one mesh per (frame, region); frames run on `jobs` workers.
MeshSequence extract_mesh_sequence(const std::vector<volcore::LabelMap>& labels,
                                   const std::vector<volcore::RegionCode>& regions, double frame_interval_s,
                                   int jobs = 1, Smoothing smoothing = Smoothing::binomial);

/// Writes fNNN_<region>.obj per non-empty mesh plus sequence.json. Empty
/// meshes get no file and a null entry in the index.
void export_mesh_sequence(const MeshSequence& ms, const std::filesystem::path& dir);

std::string mesh_file_name(std::size_t frame, volcore::RegionCode region);

}  // namespace swct::meshviz
