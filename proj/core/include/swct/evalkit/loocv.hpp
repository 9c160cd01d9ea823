#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "swct/evalkit/report.hpp"

namespace swct::evalkit {

struct Fold {
  int index = 0;
  std::vector<std::string> train;
  std::string test;
};

struct LoocvPlan {
  std::vector<Fold> folds;
};

/// Fold i tests case i and trains on the others, in input order.
/// Throws DataError("too_few_cases") below two cases and ("duplicate_case").
LoocvPlan loocv_plan(const std::vector<std::string>& case_ids);

struct PredictorSpec {
  enum class Kind { external, baseline, copy_truth };
  Kind kind = Kind::baseline;
  /// Shell command with {train}, {test} and {out} placeholders (external only).
  std::string command;
  std::filesystem::path working_dir;
  double timeout_s = 3600.0;

  /// Throws UsageError("invalid_predictor").
  void validate() const;
  /// "builtin:baseline", "builtin:copy-truth", anything else is an external command.
  static PredictorSpec parse(const std::string& text);
};

struct LoocvOptions {
  int jobs = 1;                                  // concurrent folds
  std::vector<volcore::RegionCode> regions;      // empty: regions present in the test truth
  std::filesystem::path work_dir;                // fold_i/{train.json,pred}
};

/// Runs every fold and pools the per-frame entries. A failing fold is
/// recorded in `folds` and contributes no entries.
DiceReport run_loocv(const std::vector<std::filesystem::path>& case_dirs, const PredictorSpec& predictor,
                     const LoocvOptions& options);

/// Reads `{ "cases": [dir, ...] }` (relative entries resolve against the file's directory).
std::vector<std::filesystem::path> read_case_list(const std::filesystem::path& path);
/// Entries are written relative to the file's directory.
void write_case_list(const std::vector<std::filesystem::path>& cases, const std::filesystem::path& path);

/// Reads predicted label maps for `n_frames` frames from a predictor output
/// directory: a case.json with labels, or fNNN_labels.nrrd files.
std::vector<volcore::LabelMap> read_predictions(const std::filesystem::path& out_dir, std::size_t n_frames);

}  // namespace swct::evalkit
