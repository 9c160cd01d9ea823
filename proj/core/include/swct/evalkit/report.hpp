#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "swct/evalkit/dice.hpp"

namespace swct::evalkit {

inline constexpr double kGuideline = 0.7;

struct DiceEntry {
  std::string case_id;
  int frame = 0;
  volcore::RegionCode region = volcore::RegionCode::background;
  double dice = 1.0;
  std::size_t gt_voxels = 0;
  std::size_t pred_voxels = 0;
  bool both_empty = false;
};

struct FrameRef {
  std::string case_id;
  int frame = 0;
  double dice = 0.0;
};

struct RegionAggregate {
  volcore::RegionCode region = volcore::RegionCode::background;
  std::size_t n = 0;  // entries used (both-empty excluded)
  std::size_t both_empty = 0;
  double median = 0.0;
  double stddev = 0.0;  // population
  std::vector<FrameRef> below_guideline;
};

struct FoldRecord {
  int fold = 0;
  std::string test_case;
  std::vector<std::string> train_cases;
  bool ok = true;
  std::string error_name;
  std::string error_message;
};

struct DiceReport {
  double guideline = kGuideline;
  std::vector<DiceEntry> entries;
  std::vector<RegionAggregate> aggregates;  // ascending region code
  std::vector<FoldRecord> folds;

  /// Rebuilds `aggregates` from `entries`.
  void recompute_aggregates();
  const RegionAggregate* aggregate(volcore::RegionCode r) const;
};

/// Population standard deviation (divide by n); 0 for empty input.
double population_std(const std::vector<double>& v);
/// Median; even-length samples average the two central values.
double median(std::vector<double> v);

/// Region codes present (nonzero voxels) in any of the given maps.
std::vector<volcore::RegionCode> regions_present(const std::vector<volcore::LabelMap>& maps);

/// One entry per (frame, region). Throws DataError("frame_count_mismatch")
/// or ("geometry_mismatch").
DiceReport dice_report(const std::string& case_id, const std::vector<volcore::LabelMap>& gt,
                       const std::vector<volcore::LabelMap>& pred,
                       const std::vector<volcore::RegionCode>& regions, int jobs = 1);

/// Both sequences must carry labels on every frame.
DiceReport dice_report(const volcore::Sequence4D& gt, const volcore::Sequence4D& pred,
                       const std::vector<volcore::RegionCode>& regions, int jobs = 1);

/// Merges entries and fold records; aggregates are recomputed.
DiceReport pool_reports(const std::vector<DiceReport>& reports);

std::string report_to_json(const DiceReport& r);
DiceReport report_from_json(const std::string& text);
void write_report(const DiceReport& r, const std::filesystem::path& path);
DiceReport read_report(const std::filesystem::path& path);

/// Human-readable aggregate table (two decimals).
std::string format_aggregate_table(const DiceReport& r);

}  // namespace swct::evalkit
