#pragma once

#include <functional>
#include <vector>

#include "swct/segkit/rigid.hpp"

namespace swct::segkit {

using volcore::Volume3;

struct TrackParams {
  int search_radius_vox = 5;        // coarse integer-translation grid, step 1
  double start_step_vox = 1.0;      // refinement: translation step
  double start_step_deg = 2.0;      //             rotation step
  double min_step_vox = 1.0 / 32;
  double min_step_deg = 1.0 / 16;
  int max_iterations = 100;         // coordinate-descent sweeps, all levels combined
  double tolerance = 1e-3;          // relative objective improvement per sweep
  int jobs = 1;                     // workers for the coarse search

  void validate() const;
};

struct TrackedFrame {
  RigidPose pose;
  Mask mask;                           // template under `pose`, Resample::smooth
  double objective = 0.0;              // mean squared HU difference
  std::vector<double> history;         // objective after the coarse search and every accepted sweep
};

/// Accessor so callers can stream frames without materialising a vector.
using FrameSource = std::function<const Volume3&(std::size_t)>;

/// Rigid SSD tracking of a frame-0 template through frames 0..n-1.
///
/// Frame t starts from frame t-1's pose: integer translation grid search,
/// then coordinate descent over XYZ Euler angles (about the template
/// centroid) and translation with a halving step schedule. Frame 0 is the
/// identity. Throws DataError("empty_template") and
/// AlgorithmError("objective_not_finite") when the template leaves the volume.
std::vector<TrackedFrame> track_rigid(const FrameSource& frames, std::size_t n_frames,
                                      const Mask& template_mask, const TrackParams& p = {});

/// Mean squared difference between template intensities and `frame` sampled
/// (trilinearly) at the posed template points. Exposed for tests.
double tracking_objective(const Volume3& frame0, const Volume3& frame, const Mask& template_mask,
                          const RigidPose& pose);

}  // namespace swct::segkit
