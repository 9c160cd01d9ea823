#pragma once

#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::segkit {

using volcore::Mask;

/// Rigid transform from the template frame to frame `frame_index`:
/// x' = rotation * x + translation (world mm).
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int frame_index = 0;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidPose inverse() const;

  /// Throws DataError("invalid_pose") unless R^T R = I to 1e-9 and det R = +1.
  void validate() const;

  static RigidPose identity(int frame = 0);
  /// Rotation by XYZ Euler angles (degrees) about `pivot`, followed by `shift_mm`.
  static RigidPose about_pivot(const Vec3& euler_deg, const Vec3& shift_mm, const Vec3& pivot,
                               int frame = 0);
};

/// R = Rz * Ry * Rx (rotate about x first).
Mat3 euler_xyz(const Vec3& radians);

/// Angle (degrees) of a * b^T.
double rotation_angle_deg(const Mat3& a, const Mat3& b);

enum class Resample {
  nearest,
  /// Trilinear sample of the [1,2,1]/4-smoothed indicator; the highest-valued
  /// voxels are kept, as many as the source mask has (ties included).
  /// Boundary voxels then flip one at a time under sub-voxel motion and thin
  /// parts keep their volume.
  smooth,
};

/// Resample of `mask` under `pose`; the identity pose is an exact copy.
Mask apply_rigid(const Mask& mask, const RigidPose& pose, Resample mode = Resample::nearest);

/// The field behind Resample::smooth: smoothed indicator of `mask` moved by
/// `pose`, one value in [0,1] per voxel of the grid.
std::vector<float> smooth_occupancy(const Mask& mask, const RigidPose& pose);

}  // namespace swct::segkit
