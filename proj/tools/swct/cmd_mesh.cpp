#include <spdlog/spdlog.h>

#include <memory>

#include "common.hpp"
#include "swct/meshviz/mesh_export.hpp"
#include "swct/meshviz/motion.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::cli {

namespace {

std::vector<volcore::LabelMap> case_labels(const std::string& dir, int jobs) {
  std::vector<volcore::LabelMap> out;
  const auto labels = volcore::load_case_labels(dir, jobs);
  for (std::size_t f = 0; f < labels.size(); ++f) {
    if (!labels[f]) throw DataError("missing_labels", "frame " + std::to_string(f) + " of " + dir + " has no labels");
    out.push_back(*labels[f]);
  }
  return out;
}

meshviz::Smoothing parse_smoothing(const std::string& s) {
  if (s == "none") return meshviz::Smoothing::none;
  if (s == "box") return meshviz::Smoothing::box;
  if (s == "binomial") return meshviz::Smoothing::binomial;
  throw UsageError("invalid_smoothing", "smoothing must be none, box or binomial");
}

struct ExtractOpts {
  std::string case_dir;
  std::string regions = "1,6,7,9";
  std::string smoothing = "binomial";
};

struct TraceOpts {
  std::string case_dir;
  std::string region = "6";
};

}  // namespace

void add_mesh(CLI::App& app, Globals& g, Action& action) {
  auto* group = app.add_subcommand("mesh", "Surface meshes");
  group->require_subcommand(1);
  auto o = std::make_shared<ExtractOpts>();
  auto* extract = group->add_subcommand("extract", "Marching-cubes OBJ sequence plus sequence.json");
  extract->add_option("--case", o->case_dir, "Labelled case directory")->required();
  extract->add_option("--regions", o->regions, "Comma-separated codes or names")->capture_default_str();
  extract->add_option("--smoothing", o->smoothing, "none, box or binomial")->capture_default_str();
  extract->callback([&g, &action, o] {
    action = [&g, o] {
      const auto out = require_out(g);
      const auto manifest = volcore::read_manifest(o->case_dir);
      const auto ms = meshviz::extract_mesh_sequence(case_labels(o->case_dir, g.jobs), parse_regions(o->regions),
                                                     manifest.frame_interval_s, g.jobs, parse_smoothing(o->smoothing));
      meshviz::export_mesh_sequence(ms, out);
      spdlog::info("wrote {} frames to {}", ms.frames.size(), out.string());
      return 0;
    };
  });
}

void add_motion(CLI::App& app, Globals& g, Action& action) {
  auto* group = app.add_subcommand("motion", "Motion metrics");
  group->require_subcommand(1);
  auto o = std::make_shared<TraceOpts>();
  auto* trace = group->add_subcommand("trace", "Centroid trajectory (and horn asymmetry for the hyoid)");
  trace->add_option("--case", o->case_dir, "Labelled case directory")->required();
  trace->add_option("--region", o->region, "Region code or name")->capture_default_str();
  trace->callback([&g, &action, o] {
    action = [&g, o] {
      const auto manifest = volcore::read_manifest(o->case_dir);
      const auto t = meshviz::motion_trace(case_labels(o->case_dir, g.jobs), volcore::parse_region(o->region),
                                           manifest.frame_interval_s);
      meshviz::write_trace(t, require_out(g));
      return 0;
    };
  });
}

}  // namespace swct::cli
