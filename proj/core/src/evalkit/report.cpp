#include "swct/evalkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swct/volcore/parallel.hpp"

namespace swct::evalkit {

using nlohmann::json;
using volcore::RegionCode;

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

void DiceReport::recompute_aggregates() {
  std::map<std::uint8_t, RegionAggregate> by;
  std::map<std::uint8_t, std::vector<double>> values;
  for (const auto& e : entries) {
    const auto code = static_cast<std::uint8_t>(e.region);
    auto& a = by[code];
    a.region = e.region;
    if (e.both_empty) {
      ++a.both_empty;
      continue;
    }
    values[code].push_back(e.dice);
    if (e.dice < guideline) a.below_guideline.push_back({e.case_id, e.frame, e.dice});
  }
  aggregates.clear();
  for (auto& [code, a] : by) {
    const auto& v = values[code];
    a.n = v.size();
    a.median = median(v);
    a.stddev = v.empty() ? std::numeric_limits<double>::quiet_NaN() : population_std(v);
    aggregates.push_back(std::move(a));
  }
}

const RegionAggregate* DiceReport::aggregate(RegionCode r) const {
  for (const auto& a : aggregates)
    if (a.region == r) return &a;
  return nullptr;
}

std::vector<RegionCode> regions_present(const std::vector<volcore::LabelMap>& maps) {
  std::array<bool, 256> seen{};
  for (const auto& m : maps)
    for (auto c : m.voxels()) seen[c] = true;
  std::vector<RegionCode> out;
  for (int c = 1; c <= volcore::kMaxRegionCode; ++c)
    if (seen[c]) out.push_back(static_cast<RegionCode>(c));
  return out;
}

DiceReport dice_report(const std::string& case_id, const std::vector<volcore::LabelMap>& gt,
                       const std::vector<volcore::LabelMap>& pred, const std::vector<RegionCode>& regions,
                       int jobs) {
  if (gt.size() != pred.size())
    throw DataError("frame_count_mismatch", "ground truth has " + std::to_string(gt.size()) +
                                                " frames, prediction has " + std::to_string(pred.size()));
  for (std::size_t f = 0; f < gt.size(); ++f)
    volcore::require_same_geometry(gt[f].geometry(), pred[f].geometry(), "prediction frame " + std::to_string(f));
  DiceReport r;
  r.entries.resize(gt.size() * regions.size());
  parallel_for(gt.size(), jobs, [&](std::size_t f) {
    for (std::size_t k = 0; k < regions.size(); ++k) {
      const auto d = dice_region(gt[f], pred[f], regions[k]);
      auto& e = r.entries[f * regions.size() + k];
      e.case_id = case_id;
      e.frame = static_cast<int>(f);
      e.region = regions[k];
      e.dice = d.dice;
      e.gt_voxels = d.a_voxels;
      e.pred_voxels = d.b_voxels;
      e.both_empty = d.both_empty;
    }
  });
  r.recompute_aggregates();
  return r;
}

DiceReport dice_report(const volcore::Sequence4D& gt, const volcore::Sequence4D& pred,
                       const std::vector<RegionCode>& regions, int jobs) {
  auto labels = [](const volcore::Sequence4D& s, const char* what) {
    std::vector<volcore::LabelMap> out;
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
      if (!s.frames[f].labels)
        throw DataError("missing_labels", std::string(what) + " frame " + std::to_string(f) + " has no labels");
      out.push_back(*s.frames[f].labels);
    }
    return out;
  };
  return dice_report(gt.case_id, labels(gt, "ground truth"), labels(pred, "prediction"), regions, jobs);
}

DiceReport pool_reports(const std::vector<DiceReport>& reports) {
  DiceReport out;
  for (const auto& r : reports) {
    out.entries.insert(out.entries.end(), r.entries.begin(), r.entries.end());
    out.folds.insert(out.folds.end(), r.folds.begin(), r.folds.end());
  }
  out.recompute_aggregates();
  return out;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double num_in(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string report_to_json(const DiceReport& r) {
  json j;
  j["toolkit_version"] = SWCT_VERSION;
  j["conventions"] = {
      {"dice", "2|A∩B|/(|A|+|B|) over voxel counts"},
      {"std", "population (divide by n)"},
      {"median", "even-length samples average the two central values"},
      {"quartiles", "Tukey hinges (median included in both halves for odd n)"},
      {"outliers", "beyond 1.5 IQR from the hinges; box-plot min/max are whisker ends"},
      {"both_empty", "dice reported as 1.0, flagged, excluded from aggregates"},
      {"pooling", "per frame across cases"},
  };
  j["guideline"] = r.guideline;
  json regions = json::object();
  for (auto c : volcore::all_regions())
    regions[std::to_string(static_cast<int>(c))] = std::string(volcore::region_name(c));
  j["region_codes"] = regions;

  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"case_id", e.case_id},
                       {"frame", e.frame},
                       {"region", static_cast<int>(e.region)},
                       {"dice", e.dice},
                       {"gt_voxels", e.gt_voxels},
                       {"pred_voxels", e.pred_voxels},
                       {"both_empty", e.both_empty}});
  j["entries"] = entries;

  json aggs = json::object();
  for (const auto& a : r.aggregates) {
    json below = json::array();
    for (const auto& b : a.below_guideline) below.push_back({{"case_id", b.case_id}, {"frame", b.frame}, {"dice", b.dice}});
    aggs[std::string(volcore::region_name(a.region))] = {{"code", static_cast<int>(a.region)},
                                                         {"n", a.n},
                                                         {"both_empty", a.both_empty},
                                                         {"median", num(a.median)},
                                                         {"std", num(a.stddev)},
                                                         {"below_guideline", below}};
  }
  j["aggregates"] = aggs;

  json folds = json::array();
  for (const auto& f : r.folds) {
    json fj = {{"fold", f.fold}, {"test", f.test_case}, {"train", f.train_cases}, {"ok", f.ok}};
    if (!f.ok) fj["error"] = {{"name", f.error_name}, {"message", f.error_message}};
    folds.push_back(fj);
  }
  j["folds"] = folds;
  return j.dump(2);
}

DiceReport report_from_json(const std::string& text) {
  DiceReport r;
  try {
    const json j = json::parse(text);
    r.guideline = j.value("guideline", kGuideline);
    if (!j.is_object()) throw DataError("invalid_report", "report must be a JSON object");
    for (const auto& e : j.value("entries", json::array())) {
      DiceEntry d;
      d.case_id = e.at("case_id").get<std::string>();
      d.frame = e.at("frame").get<int>();
      const int code = e.at("region").get<int>();
      if (code < 0 || code > 255 || !volcore::is_valid_region_code(static_cast<std::uint8_t>(code)))
        throw DataError("invalid_report", "entry has invalid region code " + std::to_string(code));
      d.region = static_cast<RegionCode>(code);
      d.dice = e.at("dice").get<double>();
      d.gt_voxels = e.value("gt_voxels", std::size_t{0});
      d.pred_voxels = e.value("pred_voxels", std::size_t{0});
      d.both_empty = e.value("both_empty", false);
      r.entries.push_back(std::move(d));
    }
    if (j.contains("folds"))
      for (const auto& f : j.at("folds")) {
        FoldRecord fr;
        fr.fold = f.at("fold").get<int>();
        fr.test_case = f.at("test").get<std::string>();
        fr.train_cases = f.at("train").get<std::vector<std::string>>();
        fr.ok = f.at("ok").get<bool>();
        if (f.contains("error")) {
          fr.error_name = f.at("error").at("name").get<std::string>();
          fr.error_message = f.at("error").at("message").get<std::string>();
        }
        r.folds.push_back(std::move(fr));
      }
    r.recompute_aggregates();
    // Reports may carry aggregates without entries (e.g. published summaries).
    if (r.entries.empty() && j.contains("aggregates"))
      for (const auto& [name, a] : j.at("aggregates").items()) {
        RegionAggregate ra;
        const int code = a.at("code").get<int>();
        if (code < 0 || code > 255 || !volcore::is_valid_region_code(static_cast<std::uint8_t>(code)))
          throw DataError("invalid_report", "aggregate '" + name + "' has invalid region code " + std::to_string(code));
        ra.region = static_cast<RegionCode>(code);
        ra.n = a.value("n", std::size_t{0});
        ra.median = num_in(a.at("median"));
        ra.stddev = num_in(a.at("std"));
        r.aggregates.push_back(ra);
      }
  } catch (const json::exception& e) {
    throw DataError("invalid_report", e.what());
  }
  return r;
}

void write_report(const DiceReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << report_to_json(r) << "\n";
  if (!out) throw DataError("io_error", "write failed for " + path.string());
}

DiceReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("file_not_found", "cannot open report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

std::string format_aggregate_table(const DiceReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %4s %6s %8s %6s %s\n", "region", "code", "n", "median", "std",
                "below guideline");
  out += line;
  for (const auto& a : r.aggregates) {
    auto cell = [](double v) {
      char b[32];
      if (std::isfinite(v)) std::snprintf(b, sizeof b, "%.2f", v);
      else std::snprintf(b, sizeof b, "-");
      return std::string(b);
    };
    std::snprintf(line, sizeof line, "%-20s %4d %6zu %8s %6s %zu\n", std::string(volcore::region_name(a.region)).c_str(),
                  static_cast<int>(a.region), a.n, cell(a.median).c_str(), cell(a.stddev).c_str(),
                  a.below_guideline.size());
    out += line;
  }
  char g[64];
  std::snprintf(g, sizeof g, "guideline %.1f\n", r.guideline);
  out += g;
  return out;
}

}  // namespace swct::evalkit
