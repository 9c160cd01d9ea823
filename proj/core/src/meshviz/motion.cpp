#include "swct/meshviz/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace swct::meshviz {

using nlohmann::json;
using volcore::RegionCode;

namespace {

struct Side {
  std::vector<Vec3> points;  // world mm
};

// Centroid of the posterior tenth (smallest y); ties at the cut are included.
std::optional<Vec3> posterior_landmark(std::vector<Vec3> pts) {
  if (pts.empty()) return std::nullopt;
  std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) { return a.y() < b.y(); });
  const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * pts.size())));
  const double cut = pts[k - 1].y();
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (const auto& p : pts) {
    if (p.y() > cut) break;
    sum += p;
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

MotionTrace centroid_trajectory(const std::vector<volcore::LabelMap>& labels, RegionCode region,
                                double frame_interval_s) {
  MotionTrace t;
  t.region = region;
  t.frame_interval_s = frame_interval_s;
  for (const auto& l : labels) t.centroid_mm.push_back(volcore::mask_centroid(volcore::extract_region(l, region)));
  return t;
}

MotionTrace horn_asymmetry(const std::vector<volcore::LabelMap>& labels, RegionCode region, double frame_interval_s) {
  MotionTrace t;
  t.region = region;
  t.frame_interval_s = frame_interval_s;
  if (labels.empty()) return t;
  const auto c0 = volcore::mask_centroid(volcore::extract_region(labels[0], region));
  if (!c0) throw DataError("empty_hyoid", "region is empty in frame 0");
  const auto code = static_cast<std::uint8_t>(region);

  std::optional<double> left0, right0;
  for (std::size_t f = 0; f < labels.size(); ++f) {
    const auto& l = labels[f];
    const auto& g = l.geometry();
    std::vector<Vec3> left, right;
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          if (l.at(i, j, k) != code) continue;
          const Vec3 p = volcore::voxel_center(g, i, j, k);
          if (p.x() < c0->x()) left.push_back(p);
          else if (p.x() > c0->x()) right.push_back(p);
        }
    const auto lz = posterior_landmark(std::move(left));
    const auto rz = posterior_landmark(std::move(right));
    t.left_z_mm.push_back(lz ? std::optional<double>(lz->z()) : std::nullopt);
    t.right_z_mm.push_back(rz ? std::optional<double>(rz->z()) : std::nullopt);
    if (f == 0) {
      left0 = t.left_z_mm[0];
      right0 = t.right_z_mm[0];
    }
    if (lz && rz && left0 && right0)
      t.asymmetry_mm.push_back(std::fabs((lz->z() - *left0) - (rz->z() - *right0)));
    else
      t.asymmetry_mm.push_back(std::nullopt);
  }
  return t;
}

MotionTrace motion_trace(const std::vector<volcore::LabelMap>& labels, RegionCode region, double frame_interval_s) {
  auto t = centroid_trajectory(labels, region, frame_interval_s);
  if (region == RegionCode::hyoid && !labels.empty() && t.centroid_mm[0]) {
    const auto h = horn_asymmetry(labels, region, frame_interval_s);
    t.left_z_mm = h.left_z_mm;
    t.right_z_mm = h.right_z_mm;
    t.asymmetry_mm = h.asymmetry_mm;
  }
  return t;
}

std::string trace_to_json(const MotionTrace& t) {
  auto scalars = [](const std::vector<std::optional<double>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
  };
  json centroids = json::array();
  for (const auto& c : t.centroid_mm) centroids.push_back(c ? json::array({c->x(), c->y(), c->z()}) : json(nullptr));
  json j;
  j["region"] = static_cast<int>(t.region);
  j["frame_interval_s"] = t.frame_interval_s;
  j["centroid_mm"] = centroids;
  j["asymmetry_mm"] = t.asymmetry_mm.empty()
                         ? scalars(std::vector<std::optional<double>>(t.centroid_mm.size()))
                         : scalars(t.asymmetry_mm);
  if (!t.left_z_mm.empty()) {
    j["left_horn_z_mm"] = scalars(t.left_z_mm);
    j["right_horn_z_mm"] = scalars(t.right_z_mm);
  }
  return j.dump(2);
}

void write_trace(const MotionTrace& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << trace_to_json(t) << "\n";
}

}  // namespace swct::meshviz
