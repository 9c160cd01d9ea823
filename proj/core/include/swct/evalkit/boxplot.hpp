#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "swct/evalkit/report.hpp"

namespace swct::evalkit {

/// Five-number summary with Tukey hinges. `min`/`max` are the whisker ends
/// (most extreme values within 1.5 IQR of the hinges); values beyond them
/// are listed in `outliers`.
struct BoxStats {
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  std::vector<double> outliers;
};

/// Throws DataError("empty_sample") for no values.
BoxStats box_stats(std::vector<double> values);

/// CSV with columns region,n,min,q1,median,q3,max,outliers,guideline; one
/// row per region with non-both-empty entries. Throws DataError("empty_report").
std::string boxplot_csv(const DiceReport& r);
void write_boxplot(const DiceReport& r, const std::filesystem::path& path);

}  // namespace swct::evalkit
