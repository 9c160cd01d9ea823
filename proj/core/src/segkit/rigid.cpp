#include "swct/segkit/rigid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Geometry>

namespace swct::segkit {

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  inv.frame_index = frame_index;
  return inv;
}

void RigidPose::validate() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9)) throw DataError("invalid_pose", "rotation is not orthonormal");
  if (!(std::fabs(rotation.determinant() - 1.0) <= 1e-9))
    throw DataError("invalid_pose", "rotation determinant is not +1");
  if (!translation.allFinite()) throw DataError("invalid_pose", "translation is not finite");
}

RigidPose RigidPose::identity(int frame) {
  RigidPose p;
  p.frame_index = frame;
  return p;
}

Mat3 euler_xyz(const Vec3& r) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(r.z(), Vec3::UnitZ()) * AngleAxisd(r.y(), Vec3::UnitY()) *
          AngleAxisd(r.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

RigidPose RigidPose::about_pivot(const Vec3& euler_deg, const Vec3& shift_mm, const Vec3& pivot,
                                 int frame) {
  RigidPose p;
  p.rotation = euler_xyz(euler_deg * (std::numbers::pi / 180.0));
  p.translation = pivot + shift_mm - p.rotation * pivot;
  p.frame_index = frame;
  return p;
}

double rotation_angle_deg(const Mat3& a, const Mat3& b) {
  const Mat3 d = a * b.transpose();
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

namespace {

// Smoothed indicator over the box [lo-2, hi+2], clamped to the grid.
struct SmoothField {
  Index3 lo{}, n{};
  std::vector<float> f;

  float at(int i, int j, int k) const {
    i -= lo[0];
    j -= lo[1];
    k -= lo[2];
    if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) return 0.0f;
    return f[static_cast<std::size_t>(i) + static_cast<std::size_t>(n[0]) * (j + static_cast<std::size_t>(n[1]) * k)];
  }

  double sample(const Vec3& p) const {
    const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
    const int i = static_cast<int>(fx), j = static_cast<int>(fy), k = static_cast<int>(fz);
    const double tx = p.x() - fx, ty = p.y() - fy, tz = p.z() - fz;
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
      const double w = (di ? tx : 1 - tx) * (dj ? ty : 1 - ty) * (dk ? tz : 1 - tz);
      if (w != 0.0) acc += w * at(i + di, j + dj, k + dk);
    }
    return acc;
  }
};

SmoothField smooth_indicator(const Mask& mask, const Index3& lo, const Index3& hi) {
  const auto& g = mask.geometry();
  SmoothField s;
  Index3 top{};
  for (int ax = 0; ax < 3; ++ax) {
    s.lo[ax] = std::max(0, lo[ax] - 2);
    top[ax] = std::min(g.dims[ax] - 1, hi[ax] + 2);
    s.n[ax] = top[ax] - s.lo[ax] + 1;
  }
  const auto idx = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(s.n[0]) * (j + static_cast<std::size_t>(s.n[1]) * k);
  };
  s.f.assign(static_cast<std::size_t>(s.n[0]) * s.n[1] * s.n[2], 0.0f);
  for (int k = 0; k < s.n[2]; ++k)
    for (int j = 0; j < s.n[1]; ++j)
      for (int i = 0; i < s.n[0]; ++i)
        s.f[idx(i, j, k)] = mask.at(i + s.lo[0], j + s.lo[1], k + s.lo[2]) ? 1.0f : 0.0f;
  std::vector<float> tmp(s.f.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (int k = 0; k < s.n[2]; ++k)
      for (int j = 0; j < s.n[1]; ++j)
        for (int i = 0; i < s.n[0]; ++i) {
          Index3 q{i, j, k};
          float acc = 2.0f * s.f[idx(i, j, k)];
          for (int d : {-1, 1}) {
            Index3 r = q;
            r[axis] += d;
            if (r[axis] >= 0 && r[axis] < s.n[axis]) acc += s.f[idx(r[0], r[1], r[2])];
          }
          tmp[idx(i, j, k)] = 0.25f * acc;
        }
    s.f.swap(tmp);
  }
  return s;
}

bool is_identity(const RigidPose& p) {
  return p.rotation == Mat3::Identity() && p.translation == Vec3::Zero();
}

// Output voxels the moved mask can touch, and the output->source index map.
struct Warp {
  Index3 lo{}, hi{};      // source bounding box
  Index3 from{}, to{};    // output scan box
  Mat3 a;
  Vec3 b;
  bool empty = true;
};

Warp plan_warp(const Mask& mask, const RigidPose& pose) {
  const auto& g = mask.geometry();
  Warp w;
  Index3 lo{g.dims[0], g.dims[1], g.dims[2]}, hi{-1, -1, -1};
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (mask.at(i, j, k)) {
          lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
          hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
        }
  if (hi[0] < 0) return w;
  w.empty = false;
  w.lo = lo;
  w.hi = hi;

  // Output index -> source continuous index: src = A * idx + b.
  const Mat3 s = g.spacing.asDiagonal();
  const Mat3 s_inv = g.spacing.cwiseInverse().asDiagonal();
  const Mat3 rt = pose.rotation.transpose();
  w.a = s_inv * rt * s;
  w.b = s_inv * (rt * (g.origin - pose.translation) - g.origin);

  // Forward map of the source box (plus the smoothing reach) gives the output region to scan.
  const Mat3 fa = s_inv * pose.rotation * s;
  const Vec3 fb = s_inv * (pose.rotation * g.origin + pose.translation - g.origin);
  Vec3 olo = Vec3::Constant(1e300), ohi = Vec3::Constant(-1e300);
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? hi[0] + 1.5 : lo[0] - 1.5, (c & 2) ? hi[1] + 1.5 : lo[1] - 1.5,
                      (c & 4) ? hi[2] + 1.5 : lo[2] - 1.5);
    const Vec3 q = fa * corner + fb;
    olo = olo.cwiseMin(q);
    ohi = ohi.cwiseMax(q);
  }
  for (int ax = 0; ax < 3; ++ax) {
    w.from[ax] = static_cast<int>(std::clamp(std::floor(olo[ax]) - 1.0, 0.0, double(g.dims[ax] - 1)));
    w.to[ax] = static_cast<int>(std::clamp(std::ceil(ohi[ax]) + 1.0, 0.0, double(g.dims[ax] - 1)));
  }
  return w;
}

}  // namespace

std::vector<float> smooth_occupancy(const Mask& mask, const RigidPose& pose) {
  const auto& g = mask.geometry();
  std::vector<float> out(g.voxel_count(), 0.0f);
  const auto w = plan_warp(mask, pose);
  if (w.empty) return out;
  const auto field = smooth_indicator(mask, w.lo, w.hi);
  for (int k = w.from[2]; k <= w.to[2]; ++k)
    for (int j = w.from[1]; j <= w.to[1]; ++j)
      for (int i = w.from[0]; i <= w.to[0]; ++i)
        out[g.linear(i, j, k)] = static_cast<float>(field.sample(w.a * Vec3(i, j, k) + w.b));
  return out;
}

Mask apply_rigid(const Mask& mask, const RigidPose& pose, Resample mode) {
  const auto& g = mask.geometry();
  if (is_identity(pose)) return mask;
  std::vector<std::uint8_t> out(g.voxel_count(), 0);
  const auto w = plan_warp(mask, pose);
  if (w.empty) return Mask(g, std::move(out));

  if (mode == Resample::smooth) {
    const auto field = smooth_indicator(mask, w.lo, w.hi);
    std::vector<std::pair<std::size_t, float>> scan;
    for (int k = w.from[2]; k <= w.to[2]; ++k)
      for (int j = w.from[1]; j <= w.to[1]; ++j)
        for (int i = w.from[0]; i <= w.to[0]; ++i)
          scan.emplace_back(g.linear(i, j, k), static_cast<float>(field.sample(w.a * Vec3(i, j, k) + w.b)));
    // Keep as many voxels as the source has; thin parts would vanish under a fixed 0.5 cut.
    std::vector<float> values(scan.size());
    for (std::size_t n = 0; n < scan.size(); ++n) values[n] = scan[n].second;
    const std::size_t keep = std::min(count_nonzero(mask), values.size());
    if (keep == 0) return Mask(g, std::move(out));
    std::nth_element(values.begin(), values.begin() + (keep - 1), values.end(), std::greater<float>());
    const float level = std::max(values[keep - 1], 1e-6f);
    for (const auto& [v, x] : scan)
      if (x >= level) out[v] = 1;
    return Mask(g, std::move(out));
  }

  for (int k = w.from[2]; k <= w.to[2]; ++k)
    for (int j = w.from[1]; j <= w.to[1]; ++j)
      for (int i = w.from[0]; i <= w.to[0]; ++i) {
        const Vec3 src = w.a * Vec3(i, j, k) + w.b;
        const int si = static_cast<int>(std::floor(src.x() + 0.5));
        const int sj = static_cast<int>(std::floor(src.y() + 0.5));
        const int sk = static_cast<int>(std::floor(src.z() + 0.5));
        if (g.contains(si, sj, sk) && mask.at(si, sj, sk)) out[g.linear(i, j, k)] = 1;
      }
  return Mask(g, std::move(out));
}

}  // namespace swct::segkit
