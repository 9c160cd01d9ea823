#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swct/segkit/cage.hpp"
#include "swct/segkit/rigid.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::phantom {

struct HuPalette {
  int air = -1000;
  int soft_tissue = 40;
  int bone = 800;
  int cartilage = 200;
  int bolus = 1500;
  double noise_sigma = 15.0;
};

enum class HyoidProfile {
  excursion,  // smoothstep rise, hold, smoothstep return
  linear,     // constant velocity from frame 0
};

/// Synthetic swallow. Lengths are voxels of the output grid unless noted.
struct PhantomConfig {
  std::string case_id = "phantom";
  Index3 dims{128, 128, 128};
  Vec3 spacing{0.5, 0.5, 0.5};
  int n_frames = 25;
  double frame_interval_s = 0.1;
  double exposure_s = 0.2;
  std::uint64_t rng_seed = 42;

  HyoidProfile hyoid_profile = HyoidProfile::excursion;
  Vec3 hyoid_peak_vox{2.0, 6.0, 8.0};
  double rise_start = 5.0, rise_end = 12.0;  // frames
  double return_start = 15.0, return_end = 20.0;
  Vec3 hyoid_velocity_vox{0.0, 0.0, 0.0};  // per frame, linear profile
  /// Left greater horn rises (1 + r) times as far as the right one.
  double horn_imbalance = 0.0;

  double tongue_lift_vox = 3.0;
  double tongue_start = 3.0, tongue_end = 10.0;
  /// Fraction of the pharyngeal path the bolus covers.
  double bolus_travel = 0.9;
  double bolus_start = 4.0, bolus_end = 18.0;

  bool motion_blur = false;
  int blur_samples = 5;
  bool metal_artifact = false;
  double metal_amplitude = 300.0;
  std::optional<Vec3> metal_site_mm;  // default: anterior mandible
  bool leak_bridge = false;

  HuPalette hu;

  /// Throws DataError("invalid_config") naming the offending field.
  void validate() const;
  volcore::Geometry geometry() const;
};

struct PhantomTruth {
  std::vector<segkit::RigidPose> hyoid_poses;
  Vec3 hyoid_pivot_mm = Vec3::Zero();  // frame-0 hyoid label centroid
  std::vector<Vec3> hyoid_displacement_vox;
  std::vector<Vec3> bolus_center_mm;
  std::vector<segkit::Cage> tongue_cage;
  /// Hyoid travel within each frame's exposure window (0 when blur is off).
  std::vector<double> hyoid_blur_vox;
  Vec3 metal_site_mm = Vec3::Zero();
  double horn_half_width_mm = 0.0;
};

struct PhantomCase {
  volcore::Sequence4D sequence;  // labels attached to every frame
  PhantomTruth truth;
};

/// Renders every frame. Pure in (cfg); frames are rendered on `jobs` workers.
PhantomCase generate(const PhantomConfig& cfg, int jobs = 1);

/// Alternating +/- radial streaks in the axial slab (|dz| <= 1 mm) through
/// `site`, decaying as 1/(1 + d/10 mm). Throws DataError("site_outside_volume").
volcore::Volume3 add_metal_artifact(const volcore::Volume3& v, const Vec3& site_mm, const PhantomConfig& cfg);

/// Default metal site (anterior mandible) for cfg's grid, in mm.
Vec3 default_metal_site(const PhantomConfig& cfg);

PhantomConfig read_config(const std::filesystem::path& path);
PhantomConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const PhantomConfig& cfg);

void write_truth(const PhantomTruth& t, const PhantomConfig& cfg, const std::filesystem::path& path);

/// Writes the case directory (frames, labels, case.json, truth.json).
void write_case(const PhantomCase& c, const PhantomConfig& cfg, const std::filesystem::path& dir,
                int jobs = 1);

}  // namespace swct::phantom
