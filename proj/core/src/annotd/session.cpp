#include "swct/annotd/session.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swct/meshviz/marching_cubes.hpp"
#include "swct/segkit/track.hpp"
#include "swct/segkit/voxelize.hpp"

namespace swct::annotd {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCagesFile = "cages.json";

[[noreturn]] void bad_edit(const std::string& what) { throw DataError("invalid_edit", what); }

RegionCode region_of(const json& v) {
  if (v.is_number_integer()) return volcore::parse_region(std::to_string(v.get<int>()));
  if (v.is_string()) return volcore::parse_region(v.get<std::string>());
  bad_edit("region must be a code or a name");
}

const json& need(const json& j, const char* key) {
  if (!j.contains(key)) bad_edit(std::string("missing field '") + key + "'");
  return j.at(key);
}

Vec3 vec3_of(const json& v) {
  if (!v.is_array() || v.size() != 3) bad_edit("expected a 3-element array");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

std::string random_token() {
  std::random_device rd;
  std::ostringstream os;
  os << std::hex;
  for (int n = 0; n < 4; ++n) os << rd();
  return os.str();
}

}  // namespace

Edit parse_edit(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad_edit(std::string("edit is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_edit("edit must be an object");
  try {
    const auto type = need(j, "type").get<std::string>();
    if (type == "cage") {
      CageEdit e;
      e.region = region_of(need(j, "region"));
      e.frame = need(j, "frame").get<int>();
      const auto node = need(j, "node").get<long long>();
      if (node < 0) bad_edit("node index must be non-negative");
      e.node = static_cast<std::size_t>(node);
      e.delta_mm = vec3_of(need(j, "delta_mm"));
      return e;
    }
    if (type == "grow") {
      GrowEdit e;
      e.frame = need(j, "frame").get<int>();
      e.region = region_of(need(j, "region"));
      for (const auto& s : need(j, "seeds")) {
        if (!s.is_array() || s.size() != 3) bad_edit("seeds are [x,y,z] voxel indices");
        e.params.seeds.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
      }
      const auto& range = need(j, "range");
      if (!range.is_array() || range.size() != 2) bad_edit("range is [lo, hi]");
      e.params.hu_lo = range[0].get<std::int32_t>();
      e.params.hu_hi = range[1].get<std::int32_t>();
      e.params.connectivity = j.value("connectivity", 6);
      if (j.contains("max_voxels")) e.params.max_voxels = j.at("max_voxels").get<std::size_t>();
      if (j.contains("restrict_region")) e.restrict_to = region_of(j.at("restrict_region"));
      const auto mode = j.value("mode", std::string("replace"));
      if (mode != "replace" && mode != "add") bad_edit("grow mode is 'replace' or 'add'");
      e.replace = mode == "replace";
      return e;
    }
    if (type == "track") {
      TrackEdit e;
      e.region = region_of(need(j, "region"));
      e.template_frame = j.value("template_frame", 0);
      const auto& fr = need(j, "frames");
      if (!fr.is_array() || fr.size() != 2) bad_edit("frames is [first, last]");
      e.first = fr[0].get<int>();
      e.last = fr[1].get<int>();
      return e;
    }
    if (type == "paint" || type == "erase") {
      PaintEdit e;
      e.erase = type == "erase";
      e.frame = need(j, "frame").get<int>();
      e.region = j.contains("region") ? region_of(j.at("region")) : RegionCode::background;
      if (!e.erase && e.region == RegionCode::background) bad_edit("paint needs a non-background region");
      for (const auto& r : need(j, "runs")) {
        if (!r.is_array() || r.size() != 2) bad_edit("runs are [start, length] pairs");
        e.runs.emplace_back(r[0].get<std::size_t>(), r[1].get<std::size_t>());
      }
      return e;
    }
    bad_edit("unknown edit type '" + type + "'");
  } catch (const json::exception& e) {
    bad_edit(std::string("malformed edit: ") + e.what());
  }
}

std::string result_to_json(const EditResult& r) {
  json j;
  j["status"] = r.applied ? "applied" : "rejected";
  j["changed_voxels"] = r.changed_voxels;
  j["frames"] = r.frames;
  j["undo_depth"] = r.undo_depth;
  if (!r.warning.empty()) j["warning"] = r.warning;
  if (!r.message.empty()) j["message"] = r.message;
  return j.dump();
}

Session::Session(std::string id, fs::path case_dir, int jobs, std::size_t undo_limit)
    : id_(std::move(id)), case_dir_(std::move(case_dir)), jobs_(jobs), undo_limit_(undo_limit) {
  auto seq = volcore::load_case(case_dir_, jobs_);
  case_id_ = seq.case_id;
  frame_interval_s_ = seq.frame_interval_s;
  for (auto& f : seq.frames) {
    const auto n = f.volume.size();
    labels_.push_back(f.labels ? std::move(*f.labels).release() : std::vector<std::uint8_t>(n, 0));
    frames_.push_back(std::move(f.volume));
  }
  load_cages();
}

void Session::check_frame(int frame) const {
  if (frame < 0 || static_cast<std::size_t>(frame) >= frames_.size())
    throw DataError("frame_out_of_range", "frame " + std::to_string(frame) + " outside [0, " +
                                              std::to_string(frames_.size() - 1) + "]");
}

std::string Session::meta_json() const {
  std::shared_lock lock(mutex_);
  const auto& g = geometry();
  std::set<int> present;
  for (const auto& l : labels_)
    for (auto v : l)
      if (v) present.insert(v);
  json j;
  j["id"] = id_;
  j["case_id"] = case_id_;
  j["frames"] = frames_.size();
  j["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
  j["spacing"] = {g.spacing.x(), g.spacing.y(), g.spacing.z()};
  j["origin"] = {g.origin.x(), g.origin.y(), g.origin.z()};
  j["frame_interval_s"] = frame_interval_s_;
  j["dirty"] = dirty_;
  j["undo_depth"] = undo_.size();
  j["regions"] = std::vector<int>(present.begin(), present.end());
  return j.dump();
}

Raster Session::slice(int frame, Axis a, int index, double center, double width) const {
  std::shared_lock lock(mutex_);
  check_frame(frame);
  return hu_slice(frames_[frame], a, index, center, width);
}

Raster Session::label_slice(int frame, Axis a, int index) const {
  std::shared_lock lock(mutex_);
  check_frame(frame);
  return annotd::label_slice(volcore::LabelMap(geometry(), labels_[frame]), a, index);
}

volcore::LabelMap Session::labels(int frame) const {
  std::shared_lock lock(mutex_);
  check_frame(frame);
  return volcore::LabelMap(geometry(), labels_[frame]);
}

segkit::TriMesh Session::mesh(int frame, RegionCode region) const {
  const auto l = labels(frame);
  return meshviz::marching_cubes(volcore::extract_region(l, region), region);
}

evalkit::DiceReport Session::dice_panel(const fs::path& reference_case) const {
  const auto ref = volcore::load_case_labels(reference_case, jobs_);
  std::vector<volcore::LabelMap> gt, pred;
  {
    std::shared_lock lock(mutex_);
    if (ref.size() != frames_.size())
      throw DataError("frame_count_mismatch", "reference has " + std::to_string(ref.size()) + " frames, session " +
                                                  std::to_string(frames_.size()));
    for (std::size_t f = 0; f < ref.size(); ++f) {
      if (!ref[f]) throw DataError("missing_labels", "reference frame " + std::to_string(f) + " has no labels");
      volcore::require_same_geometry(ref[f]->geometry(), geometry(), "reference frame " + std::to_string(f));
      gt.push_back(*ref[f]);
      pred.emplace_back(geometry(), labels_[f]);
    }
  }
  auto all = gt;
  all.insert(all.end(), pred.begin(), pred.end());
  return evalkit::dice_report(case_id_, gt, pred, evalkit::regions_present(all), jobs_);
}

CageState& Session::cage_state(int frame, RegionCode region) {
  const CageKey key{frame, static_cast<std::uint8_t>(region)};
  auto it = cages_.find(key);
  if (it != cages_.end()) return it->second;
  const volcore::LabelMap l(geometry(), labels_[frame]);
  auto mesh = meshviz::marching_cubes(volcore::extract_region(l, region), region);
  if (mesh.empty())
    throw DataError("empty_region", std::string(volcore::region_name(region)) + " is empty in frame " +
                                        std::to_string(frame));
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 margin = 2.0 * geometry().spacing;
  CageState st;
  st.cage = segkit::Cage::regular({3, 3, 3}, lo - margin, hi + margin);
  st.rest_mesh = std::move(mesh);
  return cages_.emplace(key, std::move(st)).first->second;
}

segkit::Cage Session::cage(int frame, RegionCode region) {
  std::unique_lock lock(mutex_);
  check_frame(frame);
  return cage_state(frame, region).cage;
}

EditResult Session::commit(UndoStep step) {
  EditResult r;
  std::set<int> touched;
  for (const auto& c : step.changes) touched.insert(static_cast<int>(c.frame));
  r.changed_voxels = step.changes.size();
  r.frames.assign(touched.begin(), touched.end());
  if (!step.changes.empty() || !step.cages_before.empty()) {
    undo_.push_back(std::move(step));
    if (undo_.size() > undo_limit_) undo_.erase(undo_.begin());
    dirty_ = true;
  }
  r.undo_depth = undo_.size();
  return r;
}

EditResult Session::apply_cage_positions(int frame, RegionCode region, const std::vector<Vec3>& displaced) {
  const CageKey key{frame, static_cast<std::uint8_t>(region)};
  const bool existed = cages_.count(key) != 0;
  auto& st = cage_state(frame, region);
  if (displaced.size() != st.cage.node_count())
    throw DataError("cage_mismatch", "cage has " + std::to_string(st.cage.node_count()) + " nodes");

  const auto binding = segkit::cage_bind(st.rest_mesh, st.cage);
  const auto before = segkit::voxelize(segkit::cage_deform(binding, st.cage), geometry());
  auto moved = st.cage;
  moved.displaced = displaced;
  const auto after = segkit::voxelize(segkit::cage_deform(binding, moved), geometry());

  UndoStep step;
  step.cages_before.emplace_back(key, existed ? std::optional<CageState>(st) : std::nullopt);
  auto& lab = labels_[frame];
  const auto code = static_cast<std::uint8_t>(region);
  for (std::size_t v = 0; v < lab.size(); ++v) {
    if (before[v] == after[v]) continue;
    if (after[v] && lab[v] == 0) {
      step.changes.push_back({static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(v), lab[v]});
      lab[v] = code;
    } else if (!after[v] && lab[v] == code) {
      step.changes.push_back({static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(v), lab[v]});
      lab[v] = 0;
    }
  }
  st.cage.displaced = displaced;
  return commit(std::move(step));
}

EditResult Session::apply_cage(const CageEdit& e) {
  check_frame(e.frame);
  auto& st = cage_state(e.frame, e.region);
  if (e.node >= st.cage.node_count())
    throw DataError("invalid_node_index", "node " + std::to_string(e.node) + " outside [0, " +
                                              std::to_string(st.cage.node_count() - 1) + "]");
  if (!e.delta_mm.allFinite()) throw DataError("invalid_edit", "delta_mm must be finite");
  auto displaced = st.cage.displaced;
  displaced[e.node] += e.delta_mm;
  return apply_cage_positions(e.frame, e.region, displaced);
}

EditResult Session::put_cage(int frame, RegionCode region, const segkit::Cage& c) {
  std::unique_lock lock(mutex_);
  check_frame(frame);
  c.validate();
  const auto& st = cage_state(frame, region);
  bool same_rest = c.dims == st.cage.dims && c.rest.size() == st.cage.rest.size();
  for (std::size_t n = 0; same_rest && n < c.rest.size(); ++n) same_rest = (c.rest[n] - st.cage.rest[n]).norm() <= 1e-9;
  if (!same_rest) throw DataError("cage_mismatch", "PUT cage must keep the dims and rest lattice of the session cage");
  return apply_cage_positions(frame, region, c.displaced);
}

EditResult Session::apply_grow(const GrowEdit& e) {
  check_frame(e.frame);
  auto params = e.params;
  auto& lab = labels_[e.frame];
  if (e.restrict_to) {
    std::vector<std::uint8_t> m(lab.size());
    for (std::size_t v = 0; v < lab.size(); ++v) m[v] = lab[v] == static_cast<std::uint8_t>(*e.restrict_to);
    params.restriction = volcore::Mask(geometry(), std::move(m));
  }
  volcore::Mask grown;
  try {
    grown = segkit::region_grow(frames_[e.frame], params);
  } catch (const AlgorithmError& err) {
    EditResult r;
    r.applied = false;
    r.warning = err.name();
    r.message = err.what();
    r.undo_depth = undo_.size();
    return r;
  }
  UndoStep step;
  const auto code = static_cast<std::uint8_t>(e.region);
  for (std::size_t v = 0; v < lab.size(); ++v) {
    std::uint8_t next = lab[v];
    if (grown[v]) next = code;
    else if (e.replace && lab[v] == code) next = 0;
    if (next != lab[v]) {
      step.changes.push_back({static_cast<std::uint32_t>(e.frame), static_cast<std::uint32_t>(v), lab[v]});
      lab[v] = next;
    }
  }
  return commit(std::move(step));
}

EditResult Session::apply_track(const TrackEdit& e) {
  check_frame(e.template_frame);
  check_frame(e.first);
  check_frame(e.last);
  if (e.first > e.last) throw DataError("invalid_edit", "track frames must satisfy first <= last");
  const auto code = static_cast<std::uint8_t>(e.region);
  std::vector<std::uint8_t> tm(labels_[e.template_frame].size());
  for (std::size_t v = 0; v < tm.size(); ++v) tm[v] = labels_[e.template_frame][v] == code;
  const volcore::Mask tmpl(geometry(), std::move(tm));

  std::vector<std::pair<int, volcore::Mask>> results;
  segkit::TrackParams tp;
  tp.jobs = jobs_;
  const int t0 = e.template_frame;
  if (e.last > t0) {
    auto forward = segkit::track_rigid([&](std::size_t i) -> const volcore::Volume3& { return frames_[t0 + i]; },
                                       static_cast<std::size_t>(e.last - t0 + 1), tmpl, tp);
    for (int f = std::max(t0 + 1, e.first); f <= e.last; ++f) results.emplace_back(f, std::move(forward[f - t0].mask));
  }
  if (e.first < t0) {
    auto backward = segkit::track_rigid([&](std::size_t i) -> const volcore::Volume3& { return frames_[t0 - i]; },
                                        static_cast<std::size_t>(t0 - e.first + 1), tmpl, tp);
    for (int f = e.first; f <= std::min(t0 - 1, e.last); ++f) results.emplace_back(f, std::move(backward[t0 - f].mask));
  }

  UndoStep step;
  for (const auto& [f, mask] : results) {
    auto& lab = labels_[f];
    for (std::size_t v = 0; v < lab.size(); ++v) {
      std::uint8_t next = lab[v];
      if (mask[v]) next = code;
      else if (lab[v] == code) next = 0;
      if (next != lab[v]) {
        step.changes.push_back({static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(v), lab[v]});
        lab[v] = next;
      }
    }
  }
  return commit(std::move(step));
}

EditResult Session::apply_paint(const PaintEdit& e) {
  check_frame(e.frame);
  auto& lab = labels_[e.frame];
  for (const auto& [start, len] : e.runs)
    if (start > lab.size() || len > lab.size() - start)
      throw DataError("run_out_of_range", "run [" + std::to_string(start) + ", +" + std::to_string(len) +
                                              ") exceeds " + std::to_string(lab.size()) + " voxels");
  UndoStep step;
  const auto code = static_cast<std::uint8_t>(e.region);
  for (const auto& [start, len] : e.runs)
    for (std::size_t v = start; v < start + len; ++v) {
      std::uint8_t next = lab[v];
      if (!e.erase) next = code;
      else if (code == 0 || lab[v] == code) next = 0;
      if (next != lab[v]) {
        step.changes.push_back({static_cast<std::uint32_t>(e.frame), static_cast<std::uint32_t>(v), lab[v]});
        lab[v] = next;
      }
    }
  return commit(std::move(step));
}

EditResult Session::apply(const Edit& e) {
  std::unique_lock lock(mutex_);
  return std::visit(
      [&](const auto& x) -> EditResult {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CageEdit>) return apply_cage(x);
        else if constexpr (std::is_same_v<T, GrowEdit>) return apply_grow(x);
        else if constexpr (std::is_same_v<T, TrackEdit>) return apply_track(x);
        else return apply_paint(x);
      },
      e);
}

EditResult Session::undo() {
  std::unique_lock lock(mutex_);
  EditResult r;
  if (undo_.empty()) {
    r.applied = false;
    r.warning = "nothing_to_undo";
    return r;
  }
  auto step = std::move(undo_.back());
  undo_.pop_back();
  std::set<int> touched;
  for (auto it = step.changes.rbegin(); it != step.changes.rend(); ++it) {
    labels_[it->frame][it->index] = it->before;
    touched.insert(static_cast<int>(it->frame));
  }
  for (auto& [key, before] : step.cages_before) {
    if (before) cages_[key] = std::move(*before);
    else cages_.erase(key);
  }
  dirty_ = true;
  r.changed_voxels = step.changes.size();
  r.frames.assign(touched.begin(), touched.end());
  r.undo_depth = undo_.size();
  return r;
}

void Session::save() {
  std::unique_lock lock(mutex_);
  auto manifest = volcore::read_manifest(case_dir_);
  if (manifest.frames.size() != frames_.size())
    throw DataError("invalid_manifest", "case.json frame count changed since the session opened");
  for (std::size_t f = 0; f < frames_.size(); ++f) {
    auto& entry = manifest.frames[f];
    if (!entry.labels) entry.labels = volcore::frame_labels_name(f);
    volcore::save_labels(volcore::LabelMap(geometry(), labels_[f]), volcore::resolve(case_dir_, *entry.labels),
                         volcore::Encoding::gzip);
  }
  volcore::write_manifest(case_dir_, manifest);

  json cages = json::array();
  for (const auto& [key, st] : cages_) {
    const auto region = static_cast<RegionCode>(key.second);
    char stem[16];
    std::snprintf(stem, sizeof stem, "f%03d_", key.first);
    const auto mesh_rel = fs::path("cages") / (stem + std::string(volcore::region_name(region)) + ".obj");
    segkit::write_obj(st.rest_mesh, case_dir_ / mesh_rel);
    cages.push_back({{"frame", key.first},
                     {"region", key.second},
                     {"rest_mesh", mesh_rel.generic_string()},
                     {"cage", json::parse(segkit::cage_to_json(st.cage))}});
  }
  std::ofstream out(case_dir_ / kCagesFile, std::ios::trunc);
  out << json{{"cages", cages}}.dump(2) << "\n";
  if (!out) throw DataError("io_error", "cannot write " + (case_dir_ / kCagesFile).string());
  dirty_ = false;
}

void Session::load_cages() {
  const auto path = case_dir_ / kCagesFile;
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  try {
    const auto j = json::parse(in);
    for (const auto& c : j.at("cages")) {
      CageState st;
      st.cage = segkit::cage_from_json(c.at("cage").dump());
      st.rest_mesh = segkit::read_obj(volcore::resolve(case_dir_, c.at("rest_mesh").get<std::string>()));
      const auto region = static_cast<std::uint8_t>(c.at("region").get<int>());
      st.rest_mesh.region = static_cast<RegionCode>(region);
      const int frame = c.at("frame").get<int>();
      check_frame(frame);
      cages_[{frame, region}] = std::move(st);
    }
  } catch (const json::exception& e) {
    throw DataError("invalid_cages", "cages.json: " + std::string(e.what()));
  }
}

bool Session::dirty() const {
  std::shared_lock lock(mutex_);
  return dirty_;
}

std::size_t Session::undo_depth() const {
  std::shared_lock lock(mutex_);
  return undo_.size();
}

SessionStore::SessionStore(fs::path data_root, int jobs) : jobs_(jobs) {
  std::error_code ec;
  root_ = fs::weakly_canonical(data_root, ec);
  if (ec || !fs::is_directory(root_)) throw DataError("case_not_found", "data root " + data_root.string() + " is not a directory");
}

fs::path SessionStore::resolve_case(const std::string& case_path) const {
  std::error_code ec;
  const auto dir = fs::weakly_canonical(root_ / case_path, ec);
  const auto rel = dir.lexically_relative(root_);
  if (ec || rel.empty() || *rel.begin() == ".." || !fs::is_directory(dir))
    throw DataError("case_not_found", "no case directory '" + case_path + "' under the data root");
  return dir;
}

SessionStore::Opened SessionStore::open(const std::string& case_path) {
  const auto dir = resolve_case(case_path);
  std::string id;
  {
    std::lock_guard lock(mutex_);
    id = "s" + std::to_string(next_id_++);
  }
  auto session = std::make_shared<Session>(id, dir, jobs_);
  Opened o{id, random_token()};
  std::lock_guard lock(mutex_);
  sessions_[id] = {session, o.edit_token};
  order_.push_back(id);
  return o;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.first;
}

bool SessionStore::token_matches(const std::string& id, const std::string& token) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it != sessions_.end() && !token.empty() && it->second.second == token;
}

std::string SessionStore::list_json() const {
  std::lock_guard lock(mutex_);
  json out = json::array();
  for (const auto& id : order_) {
    const auto& s = sessions_.at(id).first;
    out.push_back({{"id", id},
                   {"case", s->case_dir().lexically_relative(root_).generic_string()},
                   {"frames", s->frame_count()}});
  }
  return out.dump();
}

}  // namespace swct::annotd
