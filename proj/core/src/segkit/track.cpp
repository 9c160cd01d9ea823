#include "swct/segkit/track.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "swct/volcore/parallel.hpp"

namespace swct::segkit {

namespace {

constexpr double kOutsideHu = -1000.0;

struct Template {
  std::vector<Vec3> points;  // world mm
  std::vector<double> values;
  Vec3 centroid = Vec3::Zero();
};

// Samples the mask plus a one-voxel shell: the partial-volume boundary is
// where sub-voxel motion shows up. The pivot stays the mask centroid.
Template build_template(const Volume3& frame0, const Mask& mask) {
  volcore::require_same_geometry(frame0.geometry(), mask.geometry(), "template mask");
  Template t;
  const auto& g = mask.geometry();
  // Only the mask's bounding box plus one voxel can hold template points.
  Index3 lo = g.dims, hi{-1, -1, -1};
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) continue;
    const auto ijk = g.unravel(v);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], ijk[a]);
      hi[a] = std::max(hi[a], ijk[a]);
    }
  }
  if (hi[0] < 0) throw DataError("empty_template", "tracking template mask is empty");
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(lo[a] - 1, 0);
    hi[a] = std::min(hi[a] + 1, g.dims[a] - 1);
  }
  std::size_t inside = 0;
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        bool in = mask.at(i, j, k) != 0;
        bool near = in;
        for (int dk = -1; dk <= 1 && !near; ++dk)
          for (int dj = -1; dj <= 1 && !near; ++dj)
            for (int di = -1; di <= 1 && !near; ++di) near = mask.at_or(i + di, j + dj, k + dk, 0) != 0;
        if (!near) continue;
        const Vec3 p = volcore::voxel_center(g, i, j, k);
        t.points.push_back(p);
        t.values.push_back(frame0.at(i, j, k));
        if (in) {
          t.centroid += p;
          ++inside;
        }
      }
  t.centroid /= static_cast<double>(inside);
  return t;
}

double sample(const Volume3& v, const Vec3& idx, bool& inside) {
  const double fx = std::floor(idx.x()), fy = std::floor(idx.y()), fz = std::floor(idx.z());
  const int i = static_cast<int>(fx), j = static_cast<int>(fy), k = static_cast<int>(fz);
  const double u = idx.x() - fx, w = idx.y() - fy, s = idx.z() - fz;
  const auto& g = v.geometry();
  inside = i >= -1 && j >= -1 && k >= -1 && i < g.dims[0] && j < g.dims[1] && k < g.dims[2];
  if (!inside) return kOutsideHu;
  auto at = [&](int a, int b, int c) -> double { return g.contains(a, b, c) ? v.at(a, b, c) : kOutsideHu; };
  const double c00 = at(i, j, k) * (1 - u) + at(i + 1, j, k) * u;
  const double c10 = at(i, j + 1, k) * (1 - u) + at(i + 1, j + 1, k) * u;
  const double c01 = at(i, j, k + 1) * (1 - u) + at(i + 1, j, k + 1) * u;
  const double c11 = at(i, j + 1, k + 1) * (1 - u) + at(i + 1, j + 1, k + 1) * u;
  return (c00 * (1 - w) + c10 * w) * (1 - s) + (c01 * (1 - w) + c11 * w) * s;
}

double objective(const Template& t, const Volume3& frame, const RigidPose& pose) {
  const auto& g = frame.geometry();
  const Vec3 inv_sp = g.spacing.cwiseInverse();
  double sum = 0.0;
  std::size_t inside_count = 0;
  for (std::size_t n = 0; n < t.points.size(); ++n) {
    const Vec3 idx = (pose.apply(t.points[n]) - g.origin).cwiseProduct(inv_sp);
    bool inside = false;
    const double d = sample(frame, idx, inside) - t.values[n];
    inside_count += inside ? 1 : 0;
    sum += d * d;
  }
  if (inside_count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(t.points.size());
}

// params: euler degrees (0..2), shift mm (3..5)
using Params = std::array<double, 6>;

RigidPose pose_of(const Params& q, const Vec3& pivot, int frame) {
  return RigidPose::about_pivot(Vec3(q[0], q[1], q[2]), Vec3(q[3], q[4], q[5]), pivot, frame);
}

}  // namespace

void TrackParams::validate() const {
  if (search_radius_vox < 0 || !(start_step_vox > 0) || !(start_step_deg > 0) || !(min_step_vox > 0) ||
      !(min_step_deg > 0) || max_iterations < 1 || !(tolerance >= 0))
    throw DataError("invalid_track_params", "tracking radii, steps and iteration limits must be positive");
}

double tracking_objective(const Volume3& frame0, const Volume3& frame, const Mask& template_mask,
                          const RigidPose& pose) {
  return objective(build_template(frame0, template_mask), frame, pose);
}

std::vector<TrackedFrame> track_rigid(const FrameSource& frames, std::size_t n_frames,
                                      const Mask& template_mask, const TrackParams& p) {
  p.validate();
  if (n_frames == 0) return {};
  const Volume3& frame0 = frames(0);
  const Template tpl = build_template(frame0, template_mask);
  const auto& g = frame0.geometry();

  std::vector<TrackedFrame> out;
  out.reserve(n_frames);
  {
    TrackedFrame f0;
    f0.pose = RigidPose::identity(0);
    f0.mask = template_mask;
    f0.objective = objective(tpl, frame0, f0.pose);
    f0.history = {f0.objective};
    out.push_back(std::move(f0));
  }

  std::vector<std::pair<double, double>> levels;
  for (double sv = p.start_step_vox, sd = p.start_step_deg;;) {
    levels.emplace_back(std::max(sv, p.min_step_vox), std::max(sd, p.min_step_deg));
    if (sv * 0.5 < p.min_step_vox - 1e-12 && sd * 0.5 < p.min_step_deg - 1e-12) break;
    sv *= 0.5;
    sd *= 0.5;
  }

  Params q{};
  for (std::size_t t = 1; t < n_frames; ++t) {
    const Volume3& frame = frames(t);
    volcore::require_same_geometry(g, frame.geometry(), "frame " + std::to_string(t));
    const int fi = static_cast<int>(t);
    auto eval = [&](const Params& x) { return objective(tpl, frame, pose_of(x, tpl.centroid, fi)); };

    // Coarse integer-voxel translation search around the previous pose.
    const int r = p.search_radius_vox;
    const int side = 2 * r + 1;
    std::vector<double> grid(static_cast<std::size_t>(side) * side * side);
    parallel_for(grid.size(), p.jobs, [&](std::size_t n) {
      Params x = q;
      x[3] += (static_cast<int>(n % side) - r) * g.spacing.x();
      x[4] += (static_cast<int>((n / side) % side) - r) * g.spacing.y();
      x[5] += (static_cast<int>(n / (side * side)) - r) * g.spacing.z();
      grid[n] = eval(x);
    });
    std::size_t best_n = grid.size();
    for (std::size_t n = 0; n < grid.size(); ++n)
      if (std::isfinite(grid[n]) && (best_n == grid.size() || grid[n] < grid[best_n])) best_n = n;
    if (best_n == grid.size())
      throw AlgorithmError("objective_not_finite",
                           "template falls entirely outside frame " + std::to_string(t));
    q[3] += (static_cast<int>(best_n % side) - r) * g.spacing.x();
    q[4] += (static_cast<int>((best_n / side) % side) - r) * g.spacing.y();
    q[5] += (static_cast<int>(best_n / (side * side)) - r) * g.spacing.z();
    double best = grid[best_n];

    TrackedFrame tf;
    tf.history.push_back(best);

    // Coordinate descent, one level per halving of the step sizes.
    int sweeps = 0;
    for (const auto& [step_vox, step_deg] : levels) {
      while (sweeps < p.max_iterations) {
        const double before = best;
        for (int d = 0; d < 6; ++d) {
          const double step = d < 3 ? step_deg : step_vox * g.spacing[d - 3];
          for (double sign : {1.0, -1.0}) {
            Params x = q;
            x[d] += sign * step;
            const double v = eval(x);
            if (std::isfinite(v) && v < best) {
              best = v;
              q = x;
              break;
            }
          }
        }
        ++sweeps;
        if (best < before) tf.history.push_back(best);
        if (!(before > 0) || (before - best) / before < p.tolerance) break;
      }
    }

    tf.pose = pose_of(q, tpl.centroid, fi);
    tf.objective = best;
    tf.mask = apply_rigid(template_mask, tf.pose, Resample::smooth);
    out.push_back(std::move(tf));
  }
  return out;
}

}  // namespace swct::segkit
