#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "swct/segkit/trimesh.hpp"

namespace swct::segkit {

/// Axis-aligned control lattice for free-form deformation. Nodes are stored
/// x-fastest: node (i,j,k) is at index i + cx*(j + cy*k).
struct Cage {
  std::array<int, 3> dims{2, 2, 2};
  std::vector<Vec3> rest;
  std::vector<Vec3> displaced;

  std::size_t node_count() const noexcept {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t node_index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims[0]) * (j + static_cast<std::size_t>(dims[1]) * k);
  }

  /// Throws DataError("invalid_cage") unless dims >= 2, node counts match and
  /// the rest lattice is axis aligned with strictly increasing coordinates.
  void validate() const;

  /// Rest lattice spanning [lo, hi] with dims nodes per axis; displaced = rest.
  static Cage regular(const std::array<int, 3>& dims, const Vec3& lo, const Vec3& hi);
};

/// Trilinear coordinates of one vertex within its lattice cell.
struct VertexBinding {
  std::array<int, 3> cell{0, 0, 0};
  std::array<double, 8> weights{};  // corner order: bit0 = +x, bit1 = +y, bit2 = +z
};

struct CageBinding {
  std::array<int, 3> dims{2, 2, 2};
  std::vector<VertexBinding> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  volcore::RegionCode region = volcore::RegionCode::background;
};

/// Binds every mesh vertex to its containing rest cell. Throws
/// DataError("vertex_outside_cage") when a vertex lies outside the lattice.
CageBinding cage_bind(const TriMesh& m, const Cage& c);

/// Trilinear blend of the displaced control points with the stored weights.
/// Throws DataError("cage_mismatch") when lattice dims differ from the binding.
TriMesh cage_deform(const CageBinding& b, const Cage& c);

/// Node indices (i,j,k) of the 8 corners of `cell`, in VertexBinding order.
std::array<std::size_t, 8> cell_corners(const Cage& c, const std::array<int, 3>& cell);

/// `{ "dims": [cx,cy,cz], "rest": [[x,y,z]...], "displaced": [[x,y,z]...] }`
Cage read_cage(const std::filesystem::path& path);
void write_cage(const Cage& c, const std::filesystem::path& path);
Cage cage_from_json(const std::string& text);
std::string cage_to_json(const Cage& c);

}  // namespace swct::segkit
