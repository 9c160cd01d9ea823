#include "scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

namespace swct::phantom::detail {

namespace {

// Reference layout on a 128^3 grid (x: left(-)/right(+), y: anterior(+), z: superior(+)).
const Vec3 kPathA(64, 64, 118), kPathB(64, 40, 118), kPathC(64, 40, 84), kPathD(64, 40, 14);
constexpr double kLumenRadius = 11.0;
constexpr double kBolusRadius = 7.0;
constexpr double kRodRadius = 2.0;
const Vec3 kConnectorA(64, 40, 21), kConnectorB(64, 64, 21);
const Vec3 kPoolLo(44, 60, 16), kPoolHi(84, 100, 26);

const Vec3 kHyoidRest(64, 80, 50);
constexpr double kHyoidBarHalf = 13.0, kHyoidBarRadius = 2.5, kHornRadius = 2.0;
const Vec3 kHornTip(19, -20, 3);
constexpr double kHornHalfWidth = 18.0;

const Vec3 kTongueCenter(64, 86, 90), kTongueSemi(24, 20, 12);
constexpr double kTongueExponent = 2.5, kCageMargin = 4.0;

constexpr double kMandibleY = 84, kMandibleZ = 84, kMandibleArc = 28, kMandibleTube = 4.5;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

bool in_box(const Vec3& s, const Vec3& lo, const Vec3& hi) {
  return (s.array() >= lo.array()).all() && (s.array() <= hi.array()).all();
}

}  // namespace

Scene::Scene(const PhantomConfig& cfg) : cfg_(cfg), geom_(cfg.geometry()) {
  f_ = std::min({geom_.dims[0], geom_.dims[1], geom_.dims[2]}) / 128.0;
  cidx_ = Vec3((geom_.dims[0] - 1) / 2.0, (geom_.dims[1] - 1) / 2.0, (geom_.dims[2] - 1) / 2.0);

  constexpr int kBezierSegments = 64;
  for (int n = 0; n <= kBezierSegments; ++n) {
    const double t = double(n) / kBezierSegments;
    path_.push_back((1 - t) * (1 - t) * kPathA + 2 * t * (1 - t) * kPathB + t * t * kPathC);
  }
  path_.push_back(kPathD);
  path_arc_.assign(path_.size(), 0.0);
  for (std::size_t n = 1; n < path_.size(); ++n) path_arc_[n] = path_arc_[n - 1] + (path_[n] - path_[n - 1]).norm();
  path_lo_ = path_hi_ = path_[0];
  for (const auto& p : path_) {
    path_lo_ = path_lo_.cwiseMin(p);
    path_hi_ = path_hi_.cwiseMax(p);
  }
}

Vec3 Scene::scene_to_world(const Vec3& s) const {
  return geom_.origin + scene_to_index(s).cwiseProduct(geom_.spacing);
}

double Scene::horn_half_width_mm() const { return kHornHalfWidth * f_ * geom_.spacing.x(); }

Vec3 Scene::hyoid_displacement_vox(double tau) const {
  if (cfg_.hyoid_profile == HyoidProfile::linear) return cfg_.hyoid_velocity_vox * tau;
  double w = 0.0;
  if (tau <= cfg_.rise_start) w = 0.0;
  else if (tau < cfg_.rise_end) w = smoothstep((tau - cfg_.rise_start) / (cfg_.rise_end - cfg_.rise_start));
  else if (tau <= cfg_.return_start) w = 1.0;
  else if (tau < cfg_.return_end) w = 1.0 - smoothstep((tau - cfg_.return_start) / (cfg_.return_end - cfg_.return_start));
  return cfg_.hyoid_peak_vox * w;
}

InstantState Scene::state(double tau) const {
  InstantState st;
  st.tau = tau;
  const Vec3 base = hyoid_displacement_vox(tau);
  const double r = cfg_.horn_imbalance;
  Vec3 d = base;
  d.z() *= 1.0 + r / 2.0;
  st.hyoid_disp_vox = d;
  // Roll about +y through the pivot: the left (-x) horn gains r*A/2, the right loses it.
  const double rise_mm = base.z() * geom_.spacing.z();
  const double sin_theta = std::clamp(r * rise_mm / (2.0 * horn_half_width_mm()), -1.0, 1.0);
  const double theta = std::asin(sin_theta);
  segkit::RigidPose pose;
  pose.rotation = Eigen::AngleAxisd(theta, Vec3::UnitY()).toRotationMatrix();
  pose.translation = pivot_ + d.cwiseProduct(geom_.spacing) - pose.rotation * pivot_;
  pose.frame_index = static_cast<int>(std::lround(tau));
  st.hyoid = pose;
  st.hyoid_inv = pose.inverse();

  const double travel = cfg_.bolus_travel * path_arc_.back();
  st.bolus_center = path_point(travel * smoothstep((tau - cfg_.bolus_start) / (cfg_.bolus_end - cfg_.bolus_start)));

  if (tau > cfg_.tongue_start && tau < cfg_.tongue_end)
    st.tongue_lift = cfg_.tongue_lift_vox / f_ *
                     std::sin(std::numbers::pi * (tau - cfg_.tongue_start) / (cfg_.tongue_end - cfg_.tongue_start));
  return st;
}

Vec3 Scene::path_point(double arc) const {
  if (arc <= 0) return path_.front();
  const auto it = std::upper_bound(path_arc_.begin(), path_arc_.end(), arc);
  if (it == path_arc_.end()) return path_.back();
  const auto n = static_cast<std::size_t>(it - path_arc_.begin());
  const double t = (arc - path_arc_[n - 1]) / (path_arc_[n] - path_arc_[n - 1]);
  return path_[n - 1] + t * (path_[n] - path_[n - 1]);
}

double Scene::path_distance(const Vec3& s) const {
  double best = 1e300;
  for (std::size_t n = 1; n < path_.size(); ++n) best = std::min(best, segment_distance(s, path_[n - 1], path_[n]));
  return best;
}

bool Scene::in_lumen(const Vec3& s) const {
  if (!in_box(s, path_lo_ - Vec3::Constant(kLumenRadius), path_hi_ + Vec3::Constant(kLumenRadius))) return false;
  return path_distance(s) <= kLumenRadius;
}

bool Scene::in_leak(const Vec3& s) const {
  if (in_box(s, kPoolLo, kPoolHi)) return true;
  if (segment_distance(s, kConnectorA, kConnectorB) <= kRodRadius) return true;
  if (!in_box(s, path_lo_ - Vec3::Constant(kRodRadius), path_hi_ + Vec3::Constant(kRodRadius))) return false;
  return path_distance(s) <= kRodRadius;
}

bool Scene::in_hyoid_rest(const Vec3& q) const {
  const Vec3 l = index_to_scene(q) - kHyoidRest;
  if (std::fabs(l.x()) > 22 || l.y() < -23 || l.y() > 3 || l.z() < -3 || l.z() > 6) return false;
  if (segment_distance(l, Vec3(-kHyoidBarHalf, 0, 0), Vec3(kHyoidBarHalf, 0, 0)) <= kHyoidBarRadius) return true;
  const Vec3 left_root(-kHyoidBarHalf, 0, 0), right_root(kHyoidBarHalf, 0, 0);
  const Vec3 left_tip(-kHornTip.x(), kHornTip.y(), kHornTip.z());
  return segment_distance(l, left_root, left_tip) <= kHornRadius ||
         segment_distance(l, right_root, kHornTip) <= kHornRadius;
}

Box Scene::hyoid_rest_box() const {
  return to_index_box(kHyoidRest + Vec3(-22, -23, -3), kHyoidRest + Vec3(22, 3, 6), 1.0);
}

bool Scene::in_tongue(const Vec3& s, double lift) const {
  Vec3 p = s;
  if (lift != 0.0) {
    const Vec3 lo = kTongueCenter - kTongueSemi - Vec3::Constant(kCageMargin);
    const Vec3 hi = kTongueCenter + kTongueSemi + Vec3::Constant(kCageMargin);
    if (in_box(s, lo, hi)) {
      // Only the dorsum node (1,1,2) of the 3x3x3 cage moves.
      const Vec3 half = (hi - lo) / 2.0;
      const double wx = std::max(0.0, 1.0 - std::fabs(s.x() - kTongueCenter.x()) / half.x());
      const double wy = std::max(0.0, 1.0 - std::fabs(s.y() - kTongueCenter.y()) / half.y());
      const double wz = std::clamp((s.z() - (lo.z() + half.z())) / half.z(), 0.0, 1.0);
      p.z() -= wx * wy * wz * lift;
    }
  }
  const Vec3 r = (p - kTongueCenter).cwiseQuotient(kTongueSemi).cwiseAbs();
  return std::pow(r.x(), kTongueExponent) + std::pow(r.y(), kTongueExponent) + std::pow(r.z(), kTongueExponent) <= 1.0;
}

Material Scene::material(const Vec3& q, const InstantState* st) const {
  const Vec3 s = index_to_scene(q);
  if (st && (s - st->bolus_center).squaredNorm() <= kBolusRadius * kBolusRadius) return kBolus;
  if (cfg_.leak_bridge && in_leak(s)) return kLeak;
  if (in_lumen(s)) return kLumen;
  if (s.x() >= 46 && s.x() <= 82 && s.y() >= 6 && s.y() <= 26) return kVertebra;
  if (s.y() >= kMandibleY) {
    const double rho = std::hypot(s.x() - 64.0, s.y() - kMandibleY);
    if (std::hypot(rho - kMandibleArc, s.z() - kMandibleZ) <= kMandibleTube) return kMandible;
  }
  if (st && in_tongue(s, st->tongue_lift)) return kTongue;
  const double ex = (s.x() - 64.0) / 60.0, ey = (s.y() - 60.0) / 58.0;
  if (ex * ex + ey * ey <= 1.0) return kSoft;
  return kOutside;
}

Box Scene::to_index_box(const Vec3& lo_s, const Vec3& hi_s, double margin_vox) const {
  const Vec3 a = scene_to_index(lo_s), b = scene_to_index(hi_s);
  Box box;
  for (int ax = 0; ax < 3; ++ax) {
    box.lo[ax] = std::max(0, static_cast<int>(std::floor(std::min(a[ax], b[ax]) - margin_vox)));
    box.hi[ax] = std::min(geom_.dims[ax] - 1, static_cast<int>(std::ceil(std::max(a[ax], b[ax]) + margin_vox)));
  }
  return box;
}

std::vector<Box> Scene::moving_boxes(const InstantState& st) const {
  std::vector<Box> boxes;
  const Vec3 br = Vec3::Constant(kBolusRadius);
  boxes.push_back(to_index_box(st.bolus_center - br, st.bolus_center + br, 2.0));

  const double lift = std::fabs(st.tongue_lift);
  boxes.push_back(to_index_box(kTongueCenter - kTongueSemi - Vec3(0, 0, lift),
                               kTongueCenter + kTongueSemi + Vec3(0, 0, lift), 2.0));

  std::erase_if(boxes, [](const Box& b) { return b.empty(); });
  return boxes;
}

segkit::Cage Scene::tongue_cage_mm(double lift_scene) const {
  const Vec3 lo = kTongueCenter - kTongueSemi - Vec3::Constant(kCageMargin);
  const Vec3 hi = kTongueCenter + kTongueSemi + Vec3::Constant(kCageMargin);
  auto cage = segkit::Cage::regular({3, 3, 3}, scene_to_world(lo), scene_to_world(hi));
  cage.displaced[cage.node_index(1, 1, 2)].z() += lift_scene * f_ * geom_.spacing.z();
  return cage;
}

int Scene::hu_of(Material m, const HuPalette& hu) {
  switch (m) {
    case kSoft:
    case kTongue: return hu.soft_tissue;
    case kMandible:
    case kVertebra: return hu.bone;
    case kLeak:
    case kBolus: return hu.bolus;
    default: return hu.air;
  }
}

std::uint8_t Scene::label_of(Material m) {
  switch (m) {
    case kTongue: return 1;
    case kMandible: return 4;
    case kVertebra: return 5;
    case kBolus: return 9;
    default: return 0;  // the hyoid is labelled from its moved rest mask
  }
}

}  // namespace swct::phantom::detail
