#include "common.hpp"

#include <charconv>
#include <sstream>

namespace swct::cli {

namespace {

int to_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw UsageError("invalid_argument", what + ": '" + s + "' is not an integer");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, sep);)
    if (!p.empty()) parts.push_back(p);
  return parts;
}

}  // namespace

std::filesystem::path require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("missing_out", "--out is required for this command");
  return g.out;
}

std::vector<volcore::RegionCode> parse_regions(const std::string& text) {
  std::vector<volcore::RegionCode> out;
  for (const auto& p : split(text, ',')) out.push_back(volcore::parse_region(p));
  return out;
}

Index3 parse_index3(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw UsageError("invalid_argument", "expected i,j,k, got '" + text + "'");
  return {to_int(parts[0], "voxel"), to_int(parts[1], "voxel"), to_int(parts[2], "voxel")};
}

std::pair<int, int> parse_frames(const std::string& text, int n) {
  std::pair<int, int> r{0, n - 1};
  if (text != "all") {
    const auto dash = text.find('-');
    if (dash == std::string::npos) {
      r.first = r.second = to_int(text, "frames");
    } else {
      r.first = to_int(text.substr(0, dash), "frames");
      r.second = to_int(text.substr(dash + 1), "frames");
    }
  }
  if (r.first < 0 || r.second >= n || r.first > r.second)
    throw UsageError("invalid_frames", "frame range '" + text + "' outside [0, " + std::to_string(n - 1) + "]");
  return r;
}

}  // namespace swct::cli
