#pragma once

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "swct/volcore/volume.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh directory under the build tree for one test.
inline fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(SWCT_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline swct::volcore::Geometry cube(int n, double spacing = 1.0) {
  swct::volcore::Geometry g;
  g.dims = {n, n, n};
  g.spacing = swct::Vec3::Constant(spacing);
  return g;
}

inline swct::volcore::Mask box(const swct::volcore::Geometry& g, swct::Index3 lo, swct::Index3 hi) {
  std::vector<std::uint8_t> v(g.voxel_count(), 0);
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i) v[g.linear(i, j, k)] = 1;
  return {g, std::move(v)};
}

inline swct::volcore::Mask ball(const swct::volcore::Geometry& g, const swct::Vec3& c, double r) {
  std::vector<std::uint8_t> v(g.voxel_count(), 0);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) v[g.linear(i, j, k)] = (swct::Vec3(i, j, k) - c).norm() <= r;
  return {g, std::move(v)};
}

template <typename Pred>
swct::volcore::Mask mask_where(const swct::volcore::Geometry& g, Pred&& keep) {
  std::vector<std::uint8_t> v(g.voxel_count(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = keep(i) ? 1 : 0;
  return {g, std::move(v)};
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace testutil

/// Checks that `expr` throws swct::Error with the given name.
#define CHECK_THROWS_NAMED(expr, expected)                      \
  do {                                                          \
    std::string got_ = "<no exception>";                        \
    try {                                                       \
      (void)(expr);                                             \
    } catch (const swct::Error& e_) {                           \
      got_ = e_.name();                                         \
    }                                                           \
    CHECK(got_ == std::string(expected));                       \
  } while (0)
