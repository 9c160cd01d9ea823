#include "swct/volcore/sequence.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "swct/volcore/parallel.hpp"

namespace swct::volcore {

using nlohmann::json;

namespace {

[[noreturn]] void bad_manifest(const std::filesystem::path& p, const std::string& why) {
  throw DataError("invalid_manifest", p.string() + ": " + why);
}

}  // namespace

std::string frame_volume_name(std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%03zu.nrrd", frame);
  return buf;
}

std::string frame_labels_name(std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%03zu_labels.nrrd", frame);
  return buf;
}

std::filesystem::path resolve(const std::filesystem::path& case_dir, const std::filesystem::path& p) {
  return p.is_absolute() ? p : case_dir / p;
}

CaseManifest read_manifest(const std::filesystem::path& case_dir) {
  const auto path = case_dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw DataError("invalid_manifest", "no " + std::string(kManifestName) + " in " + case_dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    bad_manifest(path, e.what());
  }
  CaseManifest m;
  try {
    m.case_id = j.at("case_id").get<std::string>();
    m.frame_interval_s = j.at("frame_interval_s").get<double>();
    for (const auto& f : j.at("frames")) {
      CaseManifest::Entry e;
      e.volume = f.at("volume").get<std::string>();
      if (f.contains("labels") && !f["labels"].is_null()) e.labels = f["labels"].get<std::string>();
      m.frames.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    bad_manifest(path, e.what());
  }
  if (m.frames.empty()) bad_manifest(path, "no frames listed");
  if (!(m.frame_interval_s > 0.0)) bad_manifest(path, "frame_interval_s must be > 0");
  return m;
}

void write_manifest(const std::filesystem::path& case_dir, const CaseManifest& m) {
  json frames = json::array();
  for (const auto& e : m.frames) {
    json f;
    f["volume"] = e.volume.generic_string();
    f["labels"] = e.labels ? json(e.labels->generic_string()) : json(nullptr);
    frames.push_back(std::move(f));
  }
  json j;
  j["case_id"] = m.case_id;
  j["frame_interval_s"] = m.frame_interval_s;
  j["frames"] = std::move(frames);
  std::filesystem::create_directories(case_dir);
  std::ofstream out(case_dir / kManifestName, std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write manifest in " + case_dir.string());
  out << j.dump(2) << "\n";
}

Sequence4D load_case(const std::filesystem::path& case_dir, int jobs) {
  const CaseManifest m = read_manifest(case_dir);
  Sequence4D s;
  s.case_id = m.case_id;
  s.frame_interval_s = m.frame_interval_s;
  s.frames.resize(m.frames.size());
  parallel_for(m.frames.size(), jobs, [&](std::size_t f) {
    s.frames[f].volume = load_volume(resolve(case_dir, m.frames[f].volume));
    if (m.frames[f].labels) s.frames[f].labels = load_labels(resolve(case_dir, *m.frames[f].labels));
  });
  return s;
}

std::vector<std::optional<LabelMap>> load_case_labels(const std::filesystem::path& case_dir, int jobs) {
  const CaseManifest m = read_manifest(case_dir);
  std::vector<std::optional<LabelMap>> out(m.frames.size());
  parallel_for(m.frames.size(), jobs, [&](std::size_t f) {
    if (m.frames[f].labels) out[f] = load_labels(resolve(case_dir, *m.frames[f].labels));
  });
  return out;
}

void save_case(const std::filesystem::path& case_dir, const Sequence4D& s, Encoding encoding, int jobs) {
  std::filesystem::create_directories(case_dir);
  CaseManifest m;
  m.case_id = s.case_id;
  m.frame_interval_s = s.frame_interval_s;
  m.frames.resize(s.frames.size());
  parallel_for(s.frames.size(), jobs, [&](std::size_t f) {
    m.frames[f].volume = frame_volume_name(f);
    save_volume(s.frames[f].volume, case_dir / m.frames[f].volume, encoding);
    if (s.frames[f].labels) {
      m.frames[f].labels = frame_labels_name(f);
      save_labels(*s.frames[f].labels, case_dir / *m.frames[f].labels, encoding);
    }
  });
  write_manifest(case_dir, m);
}

}  // namespace swct::volcore
