#include "swct/evalkit/boxplot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace swct::evalkit {

namespace {

double median_sorted(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  return n % 2 ? v[lo + n / 2] : (v[lo + n / 2 - 1] + v[lo + n / 2]) / 2.0;
}

std::string fixed4(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4f", v);
  return b;
}

}  // namespace

BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) throw DataError("empty_sample", "box statistics need at least one value");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  BoxStats s;
  s.n = n;
  s.median = median_sorted(v, 0, n);
  const std::size_t half = (n + 1) / 2;  // lower and upper halves share the median when n is odd
  s.q1 = median_sorted(v, 0, half);
  s.q3 = median_sorted(v, n - half, n);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr, hi_fence = s.q3 + 1.5 * iqr;
  s.min = s.q1;
  s.max = s.q3;
  bool have_lo = false;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      s.outliers.push_back(x);
      continue;
    }
    if (!have_lo) {
      s.min = x;
      have_lo = true;
    }
    s.max = x;
  }
  return s;
}

std::string boxplot_csv(const DiceReport& r) {
  std::map<std::uint8_t, std::vector<double>> values;
  for (const auto& e : r.entries)
    if (!e.both_empty) values[static_cast<std::uint8_t>(e.region)].push_back(e.dice);
  if (values.empty()) throw DataError("empty_report", "report has no usable Dice entries");
  char g[32];
  std::snprintf(g, sizeof g, "%.1f", r.guideline);
  std::string out = "region,n,min,q1,median,q3,max,outliers,guideline\n";
  for (const auto& [code, v] : values) {
    const auto s = box_stats(v);
    std::string outliers;
    for (std::size_t i = 0; i < s.outliers.size(); ++i) outliers += (i ? ";" : "") + fixed4(s.outliers[i]);
    out += std::string(volcore::region_name(static_cast<volcore::RegionCode>(code))) + "," + std::to_string(s.n) +
           "," + fixed4(s.min) + "," + fixed4(s.q1) + "," + fixed4(s.median) + "," + fixed4(s.q3) + "," +
           fixed4(s.max) + "," + outliers + "," + g + "\n";
  }
  return out;
}

void write_boxplot(const DiceReport& r, const std::filesystem::path& path) {
  const auto text = boxplot_csv(r);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << text;
  if (!out) throw DataError("io_error", "write failed for " + path.string());
}

}  // namespace swct::evalkit
