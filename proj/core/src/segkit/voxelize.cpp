#include "swct/segkit/voxelize.hpp"

#include <algorithm>
#include <cmath>

namespace swct::segkit {

namespace {

// Tiny fixed offset of every ray in (y, z), in units of spacing. Rays through
// voxel centres otherwise pass exactly through marching-cubes vertices.
constexpr double kRayOffsetY = 3.14159265358979e-7;
constexpr double kRayOffsetZ = 2.71828182845905e-7;

struct Point2 {
  double y, z;
};

// Orientation of p relative to the edge a->b, evaluated with the endpoints in
// canonical (index) order so both triangles sharing an edge see the same value.
int edge_side(std::uint32_t ia, const Point2& a, std::uint32_t ib, const Point2& b, const Point2& p) {
  int flip = 1;
  const Point2* u = &a;
  const Point2* v = &b;
  if (ia > ib) {
    std::swap(u, v);
    flip = -1;
  }
  const double o = (v->y - u->y) * (p.z - u->z) - (v->z - u->z) * (p.y - u->y);
  return flip * (o >= 0.0 ? 1 : -1);
}

// x coordinate where the line {y=p.y, z=p.z} pierces triangle t, if it does.
bool ray_hit(const TriMesh& m, const std::array<std::uint32_t, 3>& t, const Point2& p, double& x_hit) {
  const Vec3& a = m.vertices[t[0]];
  const Vec3& b = m.vertices[t[1]];
  const Vec3& c = m.vertices[t[2]];
  const Vec3 n = (b - a).cross(c - a);
  if (n.x() == 0.0) return false;
  const Point2 pa{a.y(), a.z()}, pb{b.y(), b.z()}, pc{c.y(), c.z()};
  const int s0 = edge_side(t[0], pa, t[1], pb, p);
  const int s1 = edge_side(t[1], pb, t[2], pc, p);
  const int s2 = edge_side(t[2], pc, t[0], pa, p);
  if (s0 != s1 || s1 != s2) return false;
  x_hit = a.x() - (n.y() * (p.y - a.y()) + n.z() * (p.z - a.z())) / n.x();
  return true;
}

}  // namespace

bool point_in_mesh(const TriMesh& m, const Vec3& q) {
  const Point2 p{q.y() + kRayOffsetY, q.z() + kRayOffsetZ};
  int crossings = 0;
  for (const auto& t : m.triangles) {
    double x = 0.0;
    if (ray_hit(m, t, p, x) && x > q.x()) ++crossings;
  }
  return (crossings & 1) != 0;
}

volcore::Mask voxelize(const TriMesh& m, const volcore::Geometry& geom) {
  geom.validate();
  std::vector<std::uint8_t> out(geom.voxel_count(), 0);
  if (m.triangles.empty()) return volcore::Mask(geom, std::move(out));
  if (!is_watertight(m))
    throw DataError("mesh_not_watertight", "voxelization needs every edge shared by exactly two triangles");

  const int ny = geom.dims[1], nz = geom.dims[2];
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(ny) * nz);
  const double oy = kRayOffsetY * geom.spacing.y();
  const double oz = kRayOffsetZ * geom.spacing.z();

  for (const auto& t : m.triangles) {
    double ylo = 1e300, yhi = -1e300, zlo = 1e300, zhi = -1e300;
    for (auto v : t) {
      ylo = std::min(ylo, m.vertices[v].y());
      yhi = std::max(yhi, m.vertices[v].y());
      zlo = std::min(zlo, m.vertices[v].z());
      zhi = std::max(zhi, m.vertices[v].z());
    }
    const int j0 = std::max(0, static_cast<int>(std::floor((ylo - oy - geom.origin.y()) / geom.spacing.y())));
    const int j1 = std::min(ny - 1, static_cast<int>(std::ceil((yhi - oy - geom.origin.y()) / geom.spacing.y())));
    const int k0 = std::max(0, static_cast<int>(std::floor((zlo - oz - geom.origin.z()) / geom.spacing.z())));
    const int k1 = std::min(nz - 1, static_cast<int>(std::ceil((zhi - oz - geom.origin.z()) / geom.spacing.z())));
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j) {
        const Point2 p{geom.origin.y() + j * geom.spacing.y() + oy, geom.origin.z() + k * geom.spacing.z() + oz};
        double x = 0.0;
        if (ray_hit(m, t, p, x)) rows[static_cast<std::size_t>(k) * ny + j].push_back(x);
      }
  }

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      auto& xs = rows[static_cast<std::size_t>(k) * ny + j];
      if (xs.empty()) continue;
      std::sort(xs.begin(), xs.end());
      std::size_t next = 0;
      bool inside = false;
      for (int i = 0; i < geom.dims[0]; ++i) {
        const double x = geom.origin.x() + i * geom.spacing.x();
        while (next < xs.size() && xs[next] < x) {
          inside = !inside;
          ++next;
        }
        if (inside) out[geom.linear(i, j, k)] = 1;
      }
    }
  return volcore::Mask(geom, std::move(out));
}

}  // namespace swct::segkit
