#include "swct/segkit/cage.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace swct::segkit {

using nlohmann::json;

namespace {

// Lattice coordinates along one axis, read from the rest nodes.
std::vector<double> axis_coords(const Cage& c, int axis) {
  std::vector<double> out(static_cast<std::size_t>(c.dims[axis]));
  for (int n = 0; n < c.dims[axis]; ++n) {
    std::array<int, 3> ijk{0, 0, 0};
    ijk[axis] = n;
    out[static_cast<std::size_t>(n)] = c.rest[c.node_index(ijk[0], ijk[1], ijk[2])][axis];
  }
  return out;
}

// Cell index and local coordinate in [0,1] for coordinate x.
std::pair<int, double> locate(const std::vector<double>& coords, double x) {
  const auto cells = static_cast<int>(coords.size()) - 1;
  auto it = std::upper_bound(coords.begin(), coords.end(), x);
  int cell = static_cast<int>(it - coords.begin()) - 1;
  cell = std::clamp(cell, 0, cells - 1);
  const double lo = coords[static_cast<std::size_t>(cell)];
  const double hi = coords[static_cast<std::size_t>(cell) + 1];
  return {cell, (x - lo) / (hi - lo)};
}

}  // namespace

void Cage::validate() const {
  for (int a = 0; a < 3; ++a)
    if (dims[a] < 2) throw DataError("invalid_cage", "cage lattice needs at least 2 nodes per axis");
  if (rest.size() != node_count() || displaced.size() != node_count())
    throw DataError("invalid_cage", "cage node count does not match its dims");
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3& p = rest[node_index(i, j, k)];
        const Vec3& ax = rest[node_index(i, 0, 0)];
        const Vec3& ay = rest[node_index(0, j, 0)];
        const Vec3& az = rest[node_index(0, 0, k)];
        if (p.x() != ax.x() || p.y() != ay.y() || p.z() != az.z())
          throw DataError("invalid_cage", "rest lattice is not axis aligned");
      }
  for (int a = 0; a < 3; ++a) {
    const auto c = axis_coords(*this, a);
    for (std::size_t n = 1; n < c.size(); ++n)
      if (!(c[n] > c[n - 1]))
        throw DataError("invalid_cage", "rest lattice coordinates must strictly increase");
  }
}

Cage Cage::regular(const std::array<int, 3>& dims, const Vec3& lo, const Vec3& hi) {
  Cage c;
  c.dims = dims;
  c.rest.resize(c.node_count());
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 t(double(i) / (dims[0] - 1), double(j) / (dims[1] - 1), double(k) / (dims[2] - 1));
        c.rest[c.node_index(i, j, k)] = lo + t.cwiseProduct(hi - lo);
      }
  c.displaced = c.rest;
  c.validate();
  return c;
}

std::array<std::size_t, 8> cell_corners(const Cage& c, const std::array<int, 3>& cell) {
  std::array<std::size_t, 8> out{};
  for (int b = 0; b < 8; ++b)
    out[static_cast<std::size_t>(b)] =
        c.node_index(cell[0] + (b & 1), cell[1] + ((b >> 1) & 1), cell[2] + ((b >> 2) & 1));
  return out;
}

CageBinding cage_bind(const TriMesh& m, const Cage& c) {
  c.validate();
  const std::array<std::vector<double>, 3> coords{axis_coords(c, 0), axis_coords(c, 1), axis_coords(c, 2)};
  CageBinding b;
  b.dims = c.dims;
  b.triangles = m.triangles;
  b.region = m.region;
  b.vertices.reserve(m.vertices.size());
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const Vec3& p = m.vertices[v];
    VertexBinding vb;
    std::array<double, 3> t{};
    for (int a = 0; a < 3; ++a) {
      if (!(p[a] >= coords[a].front() && p[a] <= coords[a].back()))
        throw DataError("vertex_outside_cage", "mesh vertex " + std::to_string(v) + " lies outside the cage");
      auto [cell, u] = locate(coords[a], p[a]);
      vb.cell[a] = cell;
      t[a] = u;
    }
    for (int corner = 0; corner < 8; ++corner) {
      double w = 1.0;
      for (int a = 0; a < 3; ++a) w *= ((corner >> a) & 1) ? t[a] : 1.0 - t[a];
      vb.weights[static_cast<std::size_t>(corner)] = w;
    }
    b.vertices.push_back(vb);
  }
  return b;
}

TriMesh cage_deform(const CageBinding& b, const Cage& c) {
  if (b.dims != c.dims) throw DataError("cage_mismatch", "cage lattice dims differ from the binding");
  if (c.displaced.size() != c.node_count())
    throw DataError("invalid_cage", "displaced node count does not match dims");
  TriMesh out;
  out.triangles = b.triangles;
  out.region = b.region;
  out.vertices.reserve(b.vertices.size());
  for (const auto& vb : b.vertices) {
    const auto corners = cell_corners(c, vb.cell);
    Vec3 p = Vec3::Zero();
    for (std::size_t n = 0; n < 8; ++n) p += vb.weights[n] * c.displaced[corners[n]];
    out.vertices.push_back(p);
  }
  return out;
}

namespace {

Cage cage_from(const json& j) {
  Cage c;
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() != 3) throw DataError("invalid_cage", "cage dims must have three entries");
  c.dims = {dims[0], dims[1], dims[2]};
  auto points = [](const json& arr) {
    std::vector<Vec3> out;
    for (const auto& p : arr) {
      const auto v = p.get<std::vector<double>>();
      if (v.size() != 3) throw DataError("invalid_cage", "cage nodes need three coordinates");
      out.emplace_back(v[0], v[1], v[2]);
    }
    return out;
  };
  c.rest = points(j.at("rest"));
  c.displaced = j.contains("displaced") ? points(j.at("displaced")) : c.rest;
  c.validate();
  return c;
}

json cage_to(const Cage& c) {
  auto points = [](const std::vector<Vec3>& pts) {
    json arr = json::array();
    for (const auto& p : pts) arr.push_back({p.x(), p.y(), p.z()});
    return arr;
  };
  json j;
  j["dims"] = {c.dims[0], c.dims[1], c.dims[2]};
  j["rest"] = points(c.rest);
  j["displaced"] = points(c.displaced);
  return j;
}

}  // namespace

Cage cage_from_json(const std::string& text) {
  try {
    return cage_from(json::parse(text));
  } catch (const json::exception& e) {
    throw DataError("invalid_cage", e.what());
  }
}

std::string cage_to_json(const Cage& c) { return cage_to(c).dump(); }

Cage read_cage(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("file_not_found", "cannot open cage file " + path.string());
  try {
    json j;
    in >> j;
    return cage_from(j);
  } catch (const json::exception& e) {
    throw DataError("invalid_cage", path.string() + ": " + e.what());
  }
}

void write_cage(const Cage& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << cage_to(c).dump(2) << "\n";
}

}  // namespace swct::segkit
