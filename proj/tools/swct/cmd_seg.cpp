#include <spdlog/spdlog.h>

#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>

#include "common.hpp"
#include "swct/segkit/cage.hpp"
#include "swct/segkit/region_grow.hpp"
#include "swct/segkit/track.hpp"
#include "swct/segkit/voxelize.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

volcore::LabelMap coded(const volcore::Mask& m, volcore::RegionCode r) {
  std::vector<std::uint8_t> v(m.voxels().begin(), m.voxels().end());
  for (auto& x : v) x = x ? static_cast<std::uint8_t>(r) : 0;
  return {m.geometry(), std::move(v)};
}

const volcore::LabelMap& frame_labels(const volcore::Sequence4D& s, int f) {
  const auto& l = s.frames.at(f).labels;
  if (!l) throw DataError("missing_labels", "frame " + std::to_string(f) + " of " + s.case_id + " has no labels");
  return *l;
}

json pose_json(const segkit::RigidPose& p, double objective) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) rot.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
  return {{"frame", p.frame_index},
          {"rotation", rot},
          {"translation_mm", {p.translation.x(), p.translation.y(), p.translation.z()}},
          {"objective", objective}};
}

struct GrowOpts {
  std::string case_dir;
  std::vector<std::string> seeds;
  std::vector<int> range;
  std::string frames = "0";
  std::string region = "bolus";
  std::string restrict_region;
  int connectivity = 6;
  std::size_t max_voxels = 2'000'000;
};

int run_grow(const Globals& g, const GrowOpts& o) {
  const auto out = require_out(g);
  const auto s = volcore::load_case(o.case_dir, g.jobs);
  const auto [first, last] = parse_frames(o.frames, static_cast<int>(s.frame_count()));
  const auto region = volcore::parse_region(o.region);

  segkit::GrowParams base;
  for (const auto& t : o.seeds) base.seeds.push_back(parse_index3(t));
  base.hu_lo = o.range.at(0);
  base.hu_hi = o.range.at(1);
  base.connectivity = o.connectivity;
  base.max_voxels = o.max_voxels;

  fs::create_directories(out);
  for (int f = first; f <= last; ++f) {
    auto p = base;
    if (!o.restrict_region.empty())
      p.restriction = volcore::extract_region(frame_labels(s, f), volcore::parse_region(o.restrict_region));
    const auto mask = segkit::region_grow(s.frames[f].volume, p);
    volcore::save_labels(coded(mask, region), out / volcore::frame_labels_name(f));
    spdlog::info("frame {}: {} voxels", f, volcore::count_nonzero(mask));
  }
  return 0;
}

struct TrackOpts {
  std::string case_dir;
  std::string region = "hyoid";
  int template_frame = 0;
  std::string template_mask;
  std::string frames = "all";
  int search_radius = 5;
};

int run_track(const Globals& g, const TrackOpts& o) {
  const auto out = require_out(g);
  const auto s = volcore::load_case(o.case_dir, g.jobs);
  const int n = static_cast<int>(s.frame_count());
  const auto [first, last] = parse_frames(o.frames, n);
  const int t0 = o.template_frame;
  if (t0 < first || t0 > last) throw UsageError("invalid_frames", "template frame must lie inside --frames");
  const auto region = volcore::parse_region(o.region);
  const auto tmpl = o.template_mask.empty() ? volcore::extract_region(frame_labels(s, t0), region)
                                            : volcore::load_labels(o.template_mask);
  volcore::require_same_geometry(tmpl.geometry(), s.geometry(), "template mask");

  segkit::TrackParams tp;
  tp.jobs = g.jobs;
  tp.search_radius_vox = o.search_radius;
  std::vector<std::optional<segkit::TrackedFrame>> tracked(n);
  auto forward = segkit::track_rigid([&](std::size_t i) -> const volcore::Volume3& { return s.frames[t0 + i].volume; },
                                     static_cast<std::size_t>(last - t0 + 1), tmpl, tp);
  for (int f = t0; f <= last; ++f) tracked[f] = std::move(forward[f - t0]);
  if (first < t0) {
    auto backward = segkit::track_rigid([&](std::size_t i) -> const volcore::Volume3& { return s.frames[t0 - i].volume; },
                                        static_cast<std::size_t>(t0 - first + 1), tmpl, tp);
    for (int f = first; f < t0; ++f) tracked[f] = std::move(backward[t0 - f]);
  }

  fs::create_directories(out);
  json poses = json::array();
  for (int f = first; f <= last; ++f) {
    auto& tf = *tracked[f];
    tf.pose.frame_index = f;
    poses.push_back(pose_json(tf.pose, tf.objective));
    volcore::save_labels(coded(tf.mask, region), out / volcore::frame_labels_name(f));
  }
  json doc = {{"region", static_cast<int>(region)}, {"template_frame", t0}, {"poses", poses}};
  std::ofstream(out / "poses.json", std::ios::binary) << doc.dump(2) << '\n';
  spdlog::info("tracked {} frames of {}", last - first + 1, volcore::region_name(region));
  return 0;
}

struct FfdOpts {
  std::string mesh;
  std::string cage;
  std::string reference;
  std::string mask_out;
};

int run_ffd(const Globals& g, const FfdOpts& o) {
  const auto out = require_out(g);
  const auto mesh = segkit::read_obj(o.mesh);
  const auto cage = segkit::read_cage(o.cage);
  const auto deformed = segkit::cage_deform(segkit::cage_bind(mesh, cage), cage);
  segkit::write_obj(deformed, out);
  if (!o.mask_out.empty()) {
    if (o.reference.empty()) throw UsageError("missing_reference", "--mask-out needs --reference VOLUME");
    const auto geom = volcore::load_volume(o.reference).geometry();
    volcore::save_labels(segkit::voxelize(deformed, geom), o.mask_out);
  }
  spdlog::info("deformed {} vertices", deformed.vertices.size());
  return 0;
}

}  // namespace

void add_seg(CLI::App& app, Globals& g, Action& action) {
  auto* group = app.add_subcommand("seg", "Segmentation operations");
  group->require_subcommand(1);

  auto go = std::make_shared<GrowOpts>();
  auto* grow = group->add_subcommand("grow", "Range-restricted region growing; writes fNNN_labels.nrrd per frame");
  grow->add_option("--case", go->case_dir, "Case directory")->required();
  grow->add_option("--seed-voxel", go->seeds, "Seed voxel i,j,k (repeatable)")->required();
  grow->add_option("--range", go->range, "Inclusive HU window LO HI")->expected(2)->delimiter(',')->required();
  grow->add_option("--frames", go->frames, "Frame, range a-b, or all")->capture_default_str();
  grow->add_option("--region", go->region, "Code written for grown voxels")->capture_default_str();
  grow->add_option("--restrict-region", go->restrict_region, "Only grow inside this labelled region");
  grow->add_option("--connectivity", go->connectivity, "6 or 26")->check(CLI::IsMember({6, 26}))->capture_default_str();
  grow->add_option("--max-voxels", go->max_voxels, "Leak cap")->capture_default_str();
  grow->callback([&g, &action, go] { action = [&g, go] { return run_grow(g, *go); }; });

  auto to = std::make_shared<TrackOpts>();
  auto* track = group->add_subcommand("track", "Rigid template tracking; writes labels and poses.json");
  track->add_option("--case", to->case_dir, "Case directory")->required();
  track->add_option("--region", to->region, "Region to track")->capture_default_str();
  track->add_option("--template-frame", to->template_frame, "Frame holding the template")->capture_default_str();
  track->add_option("--template", to->template_mask, "Template mask NRRD instead of the frame's labels");
  track->add_option("--frames", to->frames, "Frame range a-b or all")->capture_default_str();
  track->add_option("--search-radius", to->search_radius, "Coarse search radius (voxels)")->capture_default_str();
  track->callback([&g, &action, to] { action = [&g, to] { return run_track(g, *to); }; });

  auto fo = std::make_shared<FfdOpts>();
  auto* ffd = group->add_subcommand("ffd", "Deform a mesh with a displaced cage");
  ffd->add_option("--mesh", fo->mesh, "Rest mesh (OBJ)")->required()->check(CLI::ExistingFile);
  ffd->add_option("--cage", fo->cage, "Cage JSON with rest and displaced nodes")->required()->check(CLI::ExistingFile);
  ffd->add_option("--reference", fo->reference, "Volume NRRD giving the voxel grid for --mask-out");
  ffd->add_option("--mask-out", fo->mask_out, "Also write the voxelized mask here");
  ffd->callback([&g, &action, fo] { action = [&g, fo] { return run_ffd(g, *fo); }; });
}

}  // namespace swct::cli
