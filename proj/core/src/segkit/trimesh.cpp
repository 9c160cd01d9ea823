#include "swct/segkit/trimesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace swct::segkit {

void validate_mesh(const TriMesh& m) {
  const auto n = m.vertices.size();
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    for (auto idx : tri)
      if (idx >= n) throw DataError("invalid_mesh", "triangle " + std::to_string(t) + " indexes a missing vertex");
    const Vec3 e1 = m.vertices[tri[1]] - m.vertices[tri[0]];
    const Vec3 e2 = m.vertices[tri[2]] - m.vertices[tri[0]];
    if (!(e1.cross(e2).norm() > 0.0))
      throw DataError("invalid_mesh", "triangle " + std::to_string(t) + " has zero area");
  }
}

bool is_watertight(const TriMesh& m) {
  if (m.triangles.empty()) return false;
  std::unordered_map<std::uint64_t, int> edges;
  edges.reserve(m.triangles.size() * 3);
  for (const auto& tri : m.triangles)
    for (int e = 0; e < 3; ++e) {
      std::uint64_t a = tri[static_cast<std::size_t>(e)], b = tri[static_cast<std::size_t>((e + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++edges[(a << 32) | b];
    }
  for (const auto& [key, count] : edges)
    if (count != 2) return false;
  return true;
}

double surface_area(const TriMesh& m) {
  double area = 0.0;
  for (const auto& t : m.triangles)
    area += 0.5 * (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).norm();
  return area;
}

double enclosed_volume(const TriMesh& m) {
  double vol = 0.0;
  for (const auto& t : m.triangles)
    vol += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]]));
  return vol / 6.0;
}

std::string obj_text(const TriMesh& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "# swct mesh, units mm\n";
  for (const auto& v : m.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : m.triangles) out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  return out.str();
}

void write_obj(const TriMesh& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << obj_text(m);
  if (!out) throw DataError("io_error", "write failed: " + path.string());
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("file_not_found", "cannot open " + path.string());
  TriMesh m;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(is >> v.x() >> v.y() >> v.z())) throw DataError("invalid_mesh", "bad vertex line: " + line);
      m.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (is >> tok) {
        const long long i = std::stoll(tok.substr(0, tok.find('/')));
        const long long resolved = i < 0 ? static_cast<long long>(m.vertices.size()) + i : i - 1;
        if (resolved < 0) throw DataError("invalid_mesh", "bad face index in: " + line);
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (idx.size() < 3) throw DataError("invalid_mesh", "face with fewer than 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) m.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  validate_mesh(m);
  return m;
}

TriMesh make_uv_sphere(const Vec3& center, double radius, int stacks, int slices) {
  TriMesh m;
  m.vertices.push_back(center + Vec3(0, 0, radius));
  for (int s = 1; s < stacks; ++s) {
    const double th = std::numbers::pi * s / stacks;
    for (int l = 0; l < slices; ++l) {
      const double ph = 2.0 * std::numbers::pi * l / slices;
      m.vertices.push_back(center + radius * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
    }
  }
  m.vertices.push_back(center - Vec3(0, 0, radius));
  const auto ring = [&](int s, int l) {
    return static_cast<std::uint32_t>(1 + (s - 1) * slices + (l % slices));
  };
  const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (int l = 0; l < slices; ++l) m.triangles.push_back({0, ring(1, l), ring(1, l + 1)});
  for (int s = 1; s < stacks - 1; ++s)
    for (int l = 0; l < slices; ++l) {
      m.triangles.push_back({ring(s, l), ring(s + 1, l), ring(s + 1, l + 1)});
      m.triangles.push_back({ring(s, l), ring(s + 1, l + 1), ring(s, l + 1)});
    }
  for (int l = 0; l < slices; ++l) m.triangles.push_back({ring(stacks - 1, l), south, ring(stacks - 1, l + 1)});
  return m;
}

}  // namespace swct::segkit
