#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::cli {

struct Globals {
  int jobs = 1;
  bool quiet = false;
  std::string out;
  std::optional<std::uint64_t> seed;
};

/// The command picked during parsing; run after parsing succeeds.
using Action = std::function<int()>;

void add_phantom(CLI::App& app, Globals& g, Action& action);
void add_seg(CLI::App& app, Globals& g, Action& action);
void add_eval(CLI::App& app, Globals& g, Action& action);
void add_predict(CLI::App& app, Globals& g, Action& action);
void add_mesh(CLI::App& app, Globals& g, Action& action);
void add_motion(CLI::App& app, Globals& g, Action& action);
void add_serve(CLI::App& app, Globals& g, Action& action);

/// Throws UsageError("missing_out") when --out was not given.
std::filesystem::path require_out(const Globals& g);
/// "1,6,hyoid" -> codes. Empty text -> empty list.
std::vector<volcore::RegionCode> parse_regions(const std::string& text);
/// "i,j,k" -> voxel index.
Index3 parse_index3(const std::string& text);
/// "a-b", "a" or "all" over n frames -> inclusive range.
std::pair<int, int> parse_frames(const std::string& text, int n);

}  // namespace swct::cli
