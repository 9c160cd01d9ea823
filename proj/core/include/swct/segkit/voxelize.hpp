#pragma once

#include "swct/segkit/trimesh.hpp"

namespace swct::segkit {

/// Marks voxels whose centres lie inside a watertight mesh (+x ray parity).
/// Throws DataError("mesh_not_watertight") otherwise.
volcore::Mask voxelize(const TriMesh& m, const volcore::Geometry& geom);

/// Parity test for a single point; the mesh must be watertight.
bool point_in_mesh(const TriMesh& m, const Vec3& p);

}  // namespace swct::segkit
