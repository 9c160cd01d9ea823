#include "swct/meshviz/mesh_export.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "swct/volcore/parallel.hpp"

namespace swct::meshviz {

namespace fs = std::filesystem;
using nlohmann::json;
using volcore::RegionCode;

std::array<int, 3> region_color(RegionCode r) {
  switch (r) {
    case RegionCode::tongue: return {220, 90, 90};
    case RegionCode::soft_palate: return {240, 150, 120};
    case RegionCode::facial_bones: return {230, 220, 190};
    case RegionCode::mandible: return {240, 230, 200};
    case RegionCode::cervical_vertebrae: return {200, 200, 170};
    case RegionCode::hyoid: return {90, 160, 240};
    case RegionCode::thyroid_cartilage: return {120, 200, 160};
    case RegionCode::epiglottis: return {200, 120, 220};
    case RegionCode::bolus: return {250, 210, 60};
    default: return {0, 0, 0};
  }
}

std::string mesh_file_name(std::size_t frame, RegionCode region) {
  char b[16];
  std::snprintf(b, sizeof b, "f%03zu_", frame);
  return b + std::string(volcore::region_name(region)) + ".obj";
}

MeshSequence extract_mesh_sequence(const std::vector<volcore::LabelMap>& labels, const std::vector<RegionCode>& regions,
                                   double frame_interval_s, int jobs, Smoothing smoothing) {
  MeshSequence ms;
  ms.frame_interval_s = frame_interval_s;
  ms.regions = regions;
  ms.frames.assign(labels.size(), std::vector<segkit::TriMesh>(regions.size()));
  parallel_for(labels.size() * regions.size(), jobs, [&](std::size_t n) {
    const std::size_t f = n / regions.size(), r = n % regions.size();
    ms.frames[f][r] = marching_cubes(volcore::extract_region(labels[f], regions[r]), regions[r], smoothing);
  });
  return ms;
}

void export_mesh_sequence(const MeshSequence& ms, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("io_error", "cannot create " + dir.string() + ": " + ec.message());
  json regions = json::array();
  for (auto r : ms.regions) {
    const auto c = region_color(r);
    regions.push_back({{"code", static_cast<int>(r)}, {"name", volcore::region_name(r)}, {"color", {c[0], c[1], c[2]}}});
  }
  json frames = json::array();
  for (std::size_t f = 0; f < ms.frames.size(); ++f) {
    json files = json::object();
    for (std::size_t r = 0; r < ms.regions.size(); ++r) {
      const auto& m = ms.frames[f][r];
      const std::string key(volcore::region_name(ms.regions[r]));
      if (m.empty()) {
        files[key] = nullptr;
        continue;
      }
      const auto name = mesh_file_name(f, ms.regions[r]);
      segkit::write_obj(m, dir / name);
      files[key] = {{"file", name}, {"watertight", segkit::is_watertight(m)}};
    }
    frames.push_back({{"frame", f}, {"meshes", files}});
  }
  json j = {{"frame_interval_s", ms.frame_interval_s}, {"units", "mm"}, {"regions", regions}, {"frames", frames}};
  std::ofstream out(dir / "sequence.json", std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + (dir / "sequence.json").string());
  out << j.dump(2) << "\n";
}

}  // namespace swct::meshviz
