#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "swct/phantom/phantom.hpp"

namespace swct::phantom::detail {

enum Material : std::uint8_t {
  kOutside,
  kSoft,
  kTongue,
  kMandible,
  kVertebra,
  kLumen,
  kLeak,
  kBolus,
  kMaterialCount,
};

struct Box {
  Index3 lo{0, 0, 0};
  Index3 hi{-1, -1, -1};  // inclusive
  bool empty() const { return hi[0] < lo[0] || hi[1] < lo[1] || hi[2] < lo[2]; }
};

/// Moving-object parameters at one instant (tau in frame units).
struct InstantState {
  double tau = 0.0;
  Vec3 hyoid_disp_vox = Vec3::Zero();
  segkit::RigidPose hyoid;
  segkit::RigidPose hyoid_inv;
  Vec3 bolus_center = Vec3::Zero();  // scene units
  double tongue_lift = 0.0;          // scene units
};

/// Analytic scene laid out on a 128-unit reference grid and scaled to the
/// configured dims. Material queries take continuous index coordinates.
class Scene {
 public:
  explicit Scene(const PhantomConfig& cfg);

  const volcore::Geometry& geometry() const { return geom_; }
  double scale() const { return f_; }
  Vec3 index_to_scene(const Vec3& q) const { return (q - cidx_) / f_ + Vec3::Constant(63.5); }
  Vec3 scene_to_index(const Vec3& s) const { return (s - Vec3::Constant(63.5)) * f_ + cidx_; }
  Vec3 scene_to_world(const Vec3& s) const;

  void set_pivot(const Vec3& pivot_mm) { pivot_ = pivot_mm; }
  InstantState state(double tau) const;

  /// kTongue and kBolus are only produced when `st` is given. The hyoid is
  /// not part of the material field; it is rasterised once at rest and moved
  /// as a voxel mask.
  Material material(const Vec3& q, const InstantState* st) const;
  std::vector<Box> moving_boxes(const InstantState& st) const;

  bool in_hyoid_rest(const Vec3& q) const;
  Box hyoid_rest_box() const;

  Vec3 hyoid_displacement_vox(double tau) const;
  segkit::Cage tongue_cage_mm(double lift_scene) const;
  double horn_half_width_mm() const;

  static int hu_of(Material m, const HuPalette& hu);
  static std::uint8_t label_of(Material m);

 private:
  bool in_lumen(const Vec3& s) const;
  bool in_leak(const Vec3& s) const;
  bool in_tongue(const Vec3& s, double lift) const;
  double path_distance(const Vec3& s) const;
  Vec3 path_point(double arc) const;
  Box to_index_box(const Vec3& lo_s, const Vec3& hi_s, double margin_vox) const;

  PhantomConfig cfg_;
  volcore::Geometry geom_;
  double f_ = 1.0;
  Vec3 cidx_;
  Vec3 pivot_ = Vec3::Zero();
  std::vector<Vec3> path_;
  std::vector<double> path_arc_;
  Vec3 path_lo_, path_hi_;
};

}  // namespace swct::phantom::detail
