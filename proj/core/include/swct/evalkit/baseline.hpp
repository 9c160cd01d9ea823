#pragma once

#include <filesystem>
#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::evalkit {

/// Classical stand-in for a learned predictor. Uses the training cases to
/// pick a bone threshold, then on the test case: thresholds static bones
/// near their frame-0 outline, tracks the hyoid and cartilage rigidly from
/// frame 0, grows the bolus in [1000, 2000] HU frame by frame, and carries
/// the frame-0 soft tissue labels forward.
std::vector<volcore::LabelMap> predict_baseline(const std::vector<std::filesystem::path>& train_cases,
                                                const std::filesystem::path& test_case, int jobs = 1);

/// Bone threshold maximising mean bone Dice on the training cases' first frames.
int estimate_bone_threshold(const std::vector<std::filesystem::path>& train_cases);

/// Writes fNNN_labels.nrrd files.
void write_predictions(const std::vector<volcore::LabelMap>& labels, const std::filesystem::path& out_dir);

}  // namespace swct::evalkit
