#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swct/volcore/nrrd.hpp"
#include "swct/volcore/volume.hpp"

namespace swct::volcore {

/// On-disk index of a case directory (`case.json`). Paths are stored
/// relative to the case directory when written by this library.
struct CaseManifest {
  struct Entry {
    std::filesystem::path volume;
    std::optional<std::filesystem::path> labels;
  };
  std::string case_id;
  double frame_interval_s = 0.1;
  std::vector<Entry> frames;
};

inline constexpr const char* kManifestName = "case.json";

/// Throws DataError("invalid_manifest") for a missing or ill-formed case.json.
CaseManifest read_manifest(const std::filesystem::path& case_dir);
void write_manifest(const std::filesystem::path& case_dir, const CaseManifest& m);

/// Resolves a manifest path against the case directory.
std::filesystem::path resolve(const std::filesystem::path& case_dir, const std::filesystem::path& p);

/// Loads every frame (and labels, when listed). Frames are read in parallel.
Sequence4D load_case(const std::filesystem::path& case_dir, int jobs = 1);

/// Loads only the label maps of a case; entries without labels are nullopt.
std::vector<std::optional<LabelMap>> load_case_labels(const std::filesystem::path& case_dir,
                                                      int jobs = 1);

/// Writes `fNNN.nrrd` / `fNNN_labels.nrrd` plus case.json.
void save_case(const std::filesystem::path& case_dir, const Sequence4D& s,
               Encoding encoding = Encoding::raw, int jobs = 1);

std::string frame_volume_name(std::size_t frame);
std::string frame_labels_name(std::size_t frame);

}  // namespace swct::volcore
