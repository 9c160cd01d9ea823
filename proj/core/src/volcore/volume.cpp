#include "swct/volcore/volume.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace swct::volcore {

namespace {

constexpr std::array<std::string_view, 10> kRegionNames = {
    "background", "tongue", "soft_palate",       "facial_bones", "mandible",
    "cervical_vertebrae", "hyoid", "thyroid_cartilage", "epiglottis", "bolus"};

std::string fmt_vec(const Vec3& v) {
  std::ostringstream os;
  os << "(" << v.x() << "," << v.y() << "," << v.z() << ")";
  return os.str();
}

std::string fmt_geometry(const Geometry& g) {
  std::ostringstream os;
  os << "dims " << g.dims[0] << "x" << g.dims[1] << "x" << g.dims[2] << ", spacing "
     << fmt_vec(g.spacing) << ", origin " << fmt_vec(g.origin);
  return os.str();
}

}  // namespace

std::string_view region_name(RegionCode code) {
  const auto v = static_cast<std::uint8_t>(code);
  return v <= kMaxRegionCode ? kRegionNames[v] : std::string_view("invalid");
}

RegionCode parse_region(std::string_view text) {
  int value = -1;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec == std::errc() && ptr == text.data() + text.size()) {
    if (value < 0 || value > kMaxRegionCode)
      throw DataError("invalid_region", "region code out of range: " + std::string(text));
    return static_cast<RegionCode>(value);
  }
  for (std::size_t i = 0; i < kRegionNames.size(); ++i)
    if (kRegionNames[i] == text) return static_cast<RegionCode>(i);
  throw DataError("invalid_region", "unknown region: " + std::string(text));
}

bool is_valid_region_code(std::uint8_t code) noexcept { return code <= kMaxRegionCode; }

std::vector<RegionCode> all_regions() {
  std::vector<RegionCode> out;
  for (std::uint8_t c = 1; c <= kMaxRegionCode; ++c) out.push_back(static_cast<RegionCode>(c));
  return out;
}

void Geometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1)
      throw DataError("invalid_geometry", "dimension " + std::to_string(a) + " must be >= 1");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw DataError("invalid_geometry", "spacing must be finite and > 0");
    if (!std::isfinite(origin[a])) throw DataError("invalid_geometry", "origin must be finite");
  }
}

Vec3 world_to_index(const Geometry& g, const Vec3& p) {
  return (p - g.origin).cwiseQuotient(g.spacing);
}

Vec3 index_to_world(const Geometry& g, const Vec3& index) {
  return g.origin + index.cwiseProduct(g.spacing);
}

void require_same_geometry(const Geometry& a, const Geometry& b, std::string_view what) {
  if (!(a == b))
    throw DataError("geometry_mismatch", std::string(what) + ": " + fmt_geometry(a) + " vs " +
                                             fmt_geometry(b));
}

std::size_t count_nonzero(const Mask& m) {
  const auto v = m.voxels();
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](auto x) { return x != 0; }));
}

std::optional<Vec3> mask_centroid(const Mask& m) {
  const auto& g = m.geometry();
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (m.at(i, j, k)) {
          sum += Vec3(i, j, k);
          ++n;
        }
  if (n == 0) return std::nullopt;
  return index_to_world(g, sum / static_cast<double>(n));
}

Mask extract_region(const LabelMap& labels, RegionCode r) {
  const auto code = static_cast<std::uint8_t>(r);
  const auto in = labels.voxels();
  std::vector<std::uint8_t> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(),
                 [code](std::uint8_t v) { return static_cast<std::uint8_t>(v == code); });
  return Mask(labels.geometry(), std::move(out));
}

std::string_view finding_kind_name(Finding::Kind k) {
  switch (k) {
    case Finding::Kind::empty_sequence: return "empty_sequence";
    case Finding::Kind::bad_frame_interval: return "bad_frame_interval";
    case Finding::Kind::geometry_mismatch: return "geometry_mismatch";
    case Finding::Kind::label_geometry_mismatch: return "label_geometry_mismatch";
    case Finding::Kind::invalid_label_code: return "invalid_label_code";
  }
  return "unknown";
}

ValidationReport validate_sequence(const Sequence4D& s) {
  ValidationReport report;
  if (s.frames.empty()) {
    report.findings.push_back({Finding::Kind::empty_sequence, -1, 0, "sequence has no frames"});
    return report;
  }
  if (!(s.frame_interval_s > 0.0) || !std::isfinite(s.frame_interval_s))
    report.findings.push_back({Finding::Kind::bad_frame_interval, -1, 0,
                               "frame interval must be > 0 s"});

  const Geometry& ref = s.frames.front().volume.geometry();
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    const int fi = static_cast<int>(f);
    const auto& frame = s.frames[f];
    if (!(frame.volume.geometry() == ref))
      report.findings.push_back({Finding::Kind::geometry_mismatch, fi, 0,
                                 "frame " + std::to_string(f) + " has " +
                                     fmt_geometry(frame.volume.geometry()) + ", expected " +
                                     fmt_geometry(ref)});
    if (!frame.labels) continue;
    if (!(frame.labels->geometry() == frame.volume.geometry()))
      report.findings.push_back({Finding::Kind::label_geometry_mismatch, fi, 0,
                                 "labels of frame " + std::to_string(f) +
                                     " do not match the volume geometry"});
    const auto codes = frame.labels->voxels();
    const auto bad = static_cast<std::size_t>(std::count_if(
        codes.begin(), codes.end(), [](std::uint8_t c) { return !is_valid_region_code(c); }));
    if (bad > 0)
      report.findings.push_back({Finding::Kind::invalid_label_code, fi, bad,
                                 std::to_string(bad) + " voxels in frame " + std::to_string(f) +
                                     " carry codes outside 0.." +
                                     std::to_string(kMaxRegionCode)});
  }
  return report;
}

}  // namespace swct::volcore
