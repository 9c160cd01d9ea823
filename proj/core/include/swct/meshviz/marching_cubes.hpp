#pragma once

#include "swct/segkit/trimesh.hpp"

namespace swct::meshviz {

enum class Smoothing {
  none,      // raw binary field
  box,       // 3x3x3 mean
  binomial,  // separable [1 2 1]/4 per axis
};

/// Isosurface (level 0.5) of a binary mask after one 3x3x3 smoothing pass,
/// with linear edge interpolation and shared vertices. The mask is padded by
/// one empty voxel first, so the result is closed even for masks touching the
/// grid boundary. Vertices are in world millimetres, triangles wound outward.
segkit::TriMesh marching_cubes(const volcore::Mask& mask,
                               volcore::RegionCode region = volcore::RegionCode::background,
                               Smoothing smoothing = Smoothing::binomial);

}  // namespace swct::meshviz
