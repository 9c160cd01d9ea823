#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::segkit {

/// Triangle mesh in world millimetres.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  volcore::RegionCode region = volcore::RegionCode::background;

  bool empty() const noexcept { return triangles.empty(); }
};

/// Throws DataError("invalid_mesh") on out-of-range indices or zero-area triangles.
void validate_mesh(const TriMesh& m);

/// Every undirected edge is shared by exactly two triangles.
bool is_watertight(const TriMesh& m);

double surface_area(const TriMesh& m);
/// Signed enclosed volume by the divergence theorem (positive for outward winding).
double enclosed_volume(const TriMesh& m);

/// Vertex/face-only Wavefront OBJ in millimetres.
std::string obj_text(const TriMesh& m);
void write_obj(const TriMesh& m, const std::filesystem::path& path);
TriMesh read_obj(const std::filesystem::path& path);

/// Closed UV sphere (outward winding); used by tests and examples.
TriMesh make_uv_sphere(const Vec3& center, double radius, int stacks = 48, int slices = 96);

}  // namespace swct::segkit
