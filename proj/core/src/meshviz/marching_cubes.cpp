#include "swct/meshviz/marching_cubes.hpp"

#include <unordered_map>

#include "mc_tables.hpp"

namespace swct::meshviz {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Nudged off 0.5 so no smoothed sample sits exactly on the level (which
// would put vertices on grid points and create zero-area triangles).
constexpr double kLevel = 0.5 + 1e-7;

void smooth_axis(std::vector<float>& f, const Index3& n, int axis, const float w[3]) {
  std::vector<float> out(f.size());
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? std::size_t(n[0]) : std::size_t(n[0]) * n[1];
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const int c = axis == 0 ? i : axis == 1 ? j : k;
        const std::size_t idx = i + std::size_t(n[0]) * (j + std::size_t(n[1]) * k);
        float s = w[1] * f[idx];
        if (c > 0) s += w[0] * f[idx - stride];
        if (c + 1 < n[axis]) s += w[2] * f[idx + stride];
        out[idx] = s;
      }
  f.swap(out);
}

}  // namespace

segkit::TriMesh marching_cubes(const volcore::Mask& mask, volcore::RegionCode region, Smoothing smoothing) {
  segkit::TriMesh mesh;
  mesh.region = region;
  const auto& g = mask.geometry();
  if (volcore::count_nonzero(mask) == 0) return mesh;

  const Index3 n{g.dims[0] + 2, g.dims[1] + 2, g.dims[2] + 2};
  auto lin = [&](int i, int j, int k) { return i + std::size_t(n[0]) * (j + std::size_t(n[1]) * k); };
  std::vector<float> f(std::size_t(n[0]) * n[1] * n[2], 0.0f);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (mask.at(i, j, k)) f[lin(i + 1, j + 1, k + 1)] = 1.0f;

  if (smoothing != Smoothing::none) {
    const float box[3] = {1.0f / 3, 1.0f / 3, 1.0f / 3};
    const float binom[3] = {0.25f, 0.5f, 0.25f};
    for (int axis = 0; axis < 3; ++axis) smooth_axis(f, n, axis, smoothing == Smoothing::box ? box : binom);
  }

  std::unordered_map<std::uint64_t, std::uint32_t> vertex_of_edge;
  auto edge_vertex = [&](int i, int j, int k, int e) {
    int a[3], b[3];
    for (int d = 0; d < 3; ++d) {
      a[d] = (d == 0 ? i : d == 1 ? j : k) + kCorner[kEdge[e][0]][d];
      b[d] = (d == 0 ? i : d == 1 ? j : k) + kCorner[kEdge[e][1]][d];
    }
    int axis = 0;
    while (a[axis] == b[axis]) ++axis;
    if (b[axis] < a[axis]) std::swap(a, b);
    const std::uint64_t id = std::uint64_t(lin(a[0], a[1], a[2])) * 3 + axis;
    const auto [it, fresh] = vertex_of_edge.try_emplace(id, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (fresh) {
      const double va = f[lin(a[0], a[1], a[2])], vb = f[lin(b[0], b[1], b[2])];
      const double t = (kLevel - va) / (vb - va);
      Vec3 p(a[0] - 1, a[1] - 1, a[2] - 1);
      p[axis] += t;
      mesh.vertices.push_back(g.origin + p.cwiseProduct(g.spacing));
    }
    return it->second;
  };

  for (int k = 0; k + 1 < n[2]; ++k)
    for (int j = 0; j + 1 < n[1]; ++j)
      for (int i = 0; i + 1 < n[0]; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c)
          if (f[lin(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2])] < kLevel) cube |= 1 << c;
        if (detail::kEdgeTable[cube] == 0) continue;
        const int* tri = detail::kTriTable[cube];
        for (int t = 0; tri[t] != -1; t += 3) {
          const auto v0 = edge_vertex(i, j, k, tri[t]);
          const auto v1 = edge_vertex(i, j, k, tri[t + 1]);
          const auto v2 = edge_vertex(i, j, k, tri[t + 2]);
          mesh.triangles.push_back({v0, v1, v2});
        }
      }
  return mesh;
}

}  // namespace swct::meshviz
