#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swct/phantom/phantom.hpp"

namespace swct::phantom {

using nlohmann::json;

namespace {

Vec3 vec3(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw DataError("invalid_config", "expected a three-element array");
  return {v[0], v[1], v[2]};
}

json arr(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw DataError("invalid_config", where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw DataError("invalid_config", "unknown key '" + key + "' in " + where);
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void frames_pair(const json& j, const char* key, double& a, double& b) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw DataError("invalid_config", std::string(key) + " must have two entries");
  a = v[0];
  b = v[1];
}

}  // namespace

PhantomConfig config_from_json_text(const std::string& text) {
  PhantomConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j,
               {"case_id", "dims", "spacing", "n_frames", "frame_interval_s", "exposure_s", "rng_seed", "hyoid",
                "tongue", "bolus", "artifacts", "hu"},
               "config");
    opt(j, "case_id", c.case_id);
    if (j.contains("dims")) {
      const auto d = j.at("dims").get<std::vector<int>>();
      if (d.size() != 3) throw DataError("invalid_config", "dims must have three entries");
      c.dims = {d[0], d[1], d[2]};
    }
    if (j.contains("spacing")) c.spacing = vec3(j.at("spacing"));
    opt(j, "n_frames", c.n_frames);
    opt(j, "frame_interval_s", c.frame_interval_s);
    opt(j, "exposure_s", c.exposure_s);
    opt(j, "rng_seed", c.rng_seed);
    if (j.contains("hyoid")) {
      const auto& h = j.at("hyoid");
      check_keys(h, {"profile", "peak_vox", "rise_frames", "return_frames", "velocity_vox", "horn_imbalance"}, "hyoid");
      if (h.contains("profile")) {
        const auto p = h.at("profile").get<std::string>();
        if (p == "excursion") c.hyoid_profile = HyoidProfile::excursion;
        else if (p == "linear") c.hyoid_profile = HyoidProfile::linear;
        else throw DataError("invalid_config", "hyoid.profile must be 'excursion' or 'linear'");
      }
      if (h.contains("peak_vox")) c.hyoid_peak_vox = vec3(h.at("peak_vox"));
      if (h.contains("velocity_vox")) c.hyoid_velocity_vox = vec3(h.at("velocity_vox"));
      frames_pair(h, "rise_frames", c.rise_start, c.rise_end);
      frames_pair(h, "return_frames", c.return_start, c.return_end);
      opt(h, "horn_imbalance", c.horn_imbalance);
    }
    if (j.contains("tongue")) {
      const auto& t = j.at("tongue");
      check_keys(t, {"lift_vox", "frames"}, "tongue");
      opt(t, "lift_vox", c.tongue_lift_vox);
      frames_pair(t, "frames", c.tongue_start, c.tongue_end);
    }
    if (j.contains("bolus")) {
      const auto& b = j.at("bolus");
      check_keys(b, {"travel", "frames"}, "bolus");
      opt(b, "travel", c.bolus_travel);
      frames_pair(b, "frames", c.bolus_start, c.bolus_end);
    }
    if (j.contains("artifacts")) {
      const auto& a = j.at("artifacts");
      check_keys(a, {"motion_blur", "blur_samples", "metal_artifact", "metal_amplitude", "metal_site_mm", "leak_bridge"},
                 "artifacts");
      opt(a, "motion_blur", c.motion_blur);
      opt(a, "blur_samples", c.blur_samples);
      opt(a, "metal_artifact", c.metal_artifact);
      opt(a, "metal_amplitude", c.metal_amplitude);
      if (a.contains("metal_site_mm") && !a.at("metal_site_mm").is_null()) c.metal_site_mm = vec3(a.at("metal_site_mm"));
      opt(a, "leak_bridge", c.leak_bridge);
    }
    if (j.contains("hu")) {
      const auto& h = j.at("hu");
      check_keys(h, {"air", "soft_tissue", "bone", "cartilage", "bolus", "noise_sigma"}, "hu");
      opt(h, "air", c.hu.air);
      opt(h, "soft_tissue", c.hu.soft_tissue);
      opt(h, "bone", c.hu.bone);
      opt(h, "cartilage", c.hu.cartilage);
      opt(h, "bolus", c.hu.bolus);
      opt(h, "noise_sigma", c.hu.noise_sigma);
    }
  } catch (const json::exception& e) {
    throw DataError("invalid_config", e.what());
  }
  c.validate();
  return c;
}

std::string config_to_json_text(const PhantomConfig& c) {
  json j;
  j["case_id"] = c.case_id;
  j["dims"] = {c.dims[0], c.dims[1], c.dims[2]};
  j["spacing"] = arr(c.spacing);
  j["n_frames"] = c.n_frames;
  j["frame_interval_s"] = c.frame_interval_s;
  j["exposure_s"] = c.exposure_s;
  j["rng_seed"] = c.rng_seed;
  j["hyoid"] = {{"profile", c.hyoid_profile == HyoidProfile::linear ? "linear" : "excursion"},
                {"peak_vox", arr(c.hyoid_peak_vox)},
                {"rise_frames", {c.rise_start, c.rise_end}},
                {"return_frames", {c.return_start, c.return_end}},
                {"velocity_vox", arr(c.hyoid_velocity_vox)},
                {"horn_imbalance", c.horn_imbalance}};
  j["tongue"] = {{"lift_vox", c.tongue_lift_vox}, {"frames", {c.tongue_start, c.tongue_end}}};
  j["bolus"] = {{"travel", c.bolus_travel}, {"frames", {c.bolus_start, c.bolus_end}}};
  j["artifacts"] = {{"motion_blur", c.motion_blur},
                    {"blur_samples", c.blur_samples},
                    {"metal_artifact", c.metal_artifact},
                    {"metal_amplitude", c.metal_amplitude},
                    {"metal_site_mm", c.metal_site_mm ? arr(*c.metal_site_mm) : json(nullptr)},
                    {"leak_bridge", c.leak_bridge}};
  j["hu"] = {{"air", c.hu.air},         {"soft_tissue", c.hu.soft_tissue}, {"bone", c.hu.bone},
             {"cartilage", c.hu.cartilage}, {"bolus", c.hu.bolus},         {"noise_sigma", c.hu.noise_sigma}};
  return j.dump(2);
}

PhantomConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("file_not_found", "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

void write_truth(const PhantomTruth& t, const PhantomConfig& cfg, const std::filesystem::path& path) {
  json poses = json::array();
  for (const auto& p : t.hyoid_poses) {
    json r = json::array();
    for (int row = 0; row < 3; ++row) r.push_back(arr(p.rotation.row(row).transpose()));
    poses.push_back({{"frame", p.frame_index}, {"rotation", r}, {"translation_mm", arr(p.translation)}});
  }
  json disp = json::array(), bolus = json::array(), cages = json::array();
  for (const auto& d : t.hyoid_displacement_vox) disp.push_back(arr(d));
  for (const auto& b : t.bolus_center_mm) bolus.push_back(arr(b));
  for (const auto& c : t.tongue_cage) cages.push_back(json::parse(segkit::cage_to_json(c)));
  json j;
  j["case_id"] = cfg.case_id;
  j["frame_interval_s"] = cfg.frame_interval_s;
  j["hyoid"] = {{"pivot_mm", arr(t.hyoid_pivot_mm)},
                {"horn_half_width_mm", t.horn_half_width_mm},
                {"poses", poses},
                {"displacement_vox", disp},
                {"blur_travel_vox", t.hyoid_blur_vox}};
  j["bolus_center_mm"] = bolus;
  j["tongue_cage"] = cages;
  j["metal_site_mm"] = cfg.metal_artifact ? arr(t.metal_site_mm) : json(nullptr);
  j["config"] = json::parse(config_to_json_text(cfg));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_case(const PhantomCase& c, const PhantomConfig& cfg, const std::filesystem::path& dir, int jobs) {
  volcore::save_case(dir, c.sequence, volcore::Encoding::raw, jobs);
  write_truth(c.truth, cfg, dir / "truth.json");
}

}  // namespace swct::phantom
