#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "swct/annotd/image.hpp"
#include "swct/evalkit/report.hpp"
#include "swct/segkit/cage.hpp"
#include "swct/segkit/region_grow.hpp"
#include "swct/volcore/sequence.hpp"

namespace swct::annotd {

using volcore::RegionCode;

/// Move one control node of the region's cage in one frame.
struct CageEdit {
  RegionCode region = RegionCode::tongue;
  int frame = 0;
  std::size_t node = 0;
  Vec3 delta_mm = Vec3::Zero();
};

/// Replace (or add to) a region with a seeded growth result.
struct GrowEdit {
  int frame = 0;
  RegionCode region = RegionCode::bolus;
  segkit::GrowParams params;
  /// Restrict growth to voxels currently labelled with this region.
  std::optional<RegionCode> restrict_to;
  bool replace = true;
};

/// Track the region's mask in `template_frame` through [first, last].
struct TrackEdit {
  RegionCode region = RegionCode::hyoid;
  int template_frame = 0;
  int first = 0;
  int last = 0;
};

/// Runs of linear voxel indices. Paint writes `region`; erase clears voxels
/// currently coded `region` (any non-background voxel when region is background).
struct PaintEdit {
  int frame = 0;
  RegionCode region = RegionCode::background;
  bool erase = false;
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // (start, length)
};

using Edit = std::variant<CageEdit, GrowEdit, TrackEdit, PaintEdit>;

/// Parses an edit object: {"type": "cage"|"grow"|"track"|"paint"|"erase", ...}.
/// Throws DataError("invalid_edit").
Edit parse_edit(const std::string& json_text);

struct EditResult {
  bool applied = true;
  std::size_t changed_voxels = 0;
  std::vector<int> frames;  // frames whose labels changed
  std::string warning;      // e.g. "growth_cap_exceeded" when rejected
  std::string message;
  std::size_t undo_depth = 0;
};

std::string result_to_json(const EditResult& r);

/// Cage state of one (frame, region): the lattice and the rest mesh it deforms.
struct CageState {
  segkit::Cage cage;
  segkit::TriMesh rest_mesh;
};

/// One open case. Readers share the session; edits take it exclusively.
class Session {
 public:
  static constexpr std::size_t kDefaultUndoLimit = 64;

  /// Loads the case; frames without labels start empty. Throws
  /// DataError("invalid_manifest") and friends from volcore.
  Session(std::string id, std::filesystem::path case_dir, int jobs = 1,
          std::size_t undo_limit = kDefaultUndoLimit);

  const std::string& id() const noexcept { return id_; }
  const std::filesystem::path& case_dir() const noexcept { return case_dir_; }
  std::size_t frame_count() const noexcept { return frames_.size(); }
  const volcore::Geometry& geometry() const { return frames_.at(0).geometry(); }

  /// {"id", "case_id", "frames", "dims", "spacing", "origin", "frame_interval_s", "dirty", "undo_depth", "regions"}
  std::string meta_json() const;
  Raster slice(int frame, Axis a, int index, double center, double width) const;
  Raster label_slice(int frame, Axis a, int index) const;
  volcore::LabelMap labels(int frame) const;
  segkit::TriMesh mesh(int frame, RegionCode region) const;
  evalkit::DiceReport dice_panel(const std::filesystem::path& reference_case) const;

  /// Cage of (frame, region), created around the region's current mesh on
  /// first use (3x3x3 nodes, two-voxel margin). Throws DataError("empty_region").
  segkit::Cage cage(int frame, RegionCode region);
  /// Sets every displaced node at once; one undo step.
  EditResult put_cage(int frame, RegionCode region, const segkit::Cage& displaced);

  EditResult apply(const Edit& e);
  /// Reverts the latest edit; applied = false when nothing is left to undo.
  EditResult undo();
  /// Writes fNNN_labels.nrrd, case.json and cages.json into the case directory.
  void save();

  bool dirty() const;
  std::size_t undo_depth() const;

 private:
  struct Change {
    std::uint32_t frame;
    std::uint32_t index;
    std::uint8_t before;
  };
  using CageKey = std::pair<int, std::uint8_t>;
  struct UndoStep {
    std::vector<Change> changes;
    std::vector<std::pair<CageKey, std::optional<CageState>>> cages_before;
  };

  void check_frame(int frame) const;
  CageState& cage_state(int frame, RegionCode region);
  EditResult commit(UndoStep step);
  EditResult apply_cage(const CageEdit& e);
  EditResult apply_cage_positions(int frame, RegionCode region, const std::vector<Vec3>& displaced);
  EditResult apply_grow(const GrowEdit& e);
  EditResult apply_track(const TrackEdit& e);
  EditResult apply_paint(const PaintEdit& e);
  void load_cages();

  std::string id_;
  std::filesystem::path case_dir_;
  int jobs_ = 1;
  std::size_t undo_limit_;
  std::string case_id_;
  double frame_interval_s_ = 0.1;
  std::vector<volcore::Volume3> frames_;
  std::vector<std::vector<std::uint8_t>> labels_;
  std::map<CageKey, CageState> cages_;
  std::vector<UndoStep> undo_;
  bool dirty_ = false;
  mutable std::shared_mutex mutex_;
};

/// Open sessions keyed by id. Each session has one edit token; only the
/// holder may mutate it.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_root, int jobs = 1);

  struct Opened {
    std::string id;
    std::string edit_token;
  };
  /// `case_path` is resolved inside the data root; escaping it or naming a
  /// missing directory throws DataError("case_not_found").
  Opened open(const std::string& case_path);
  /// Resolves a case directory under the data root (same rules as open).
  std::filesystem::path resolve_case(const std::string& case_path) const;
  std::shared_ptr<Session> find(const std::string& id) const;
  bool token_matches(const std::string& id, const std::string& token) const;
  /// [{"id", "case", "frames"}...]
  std::string list_json() const;

 private:
  std::filesystem::path root_;
  int jobs_;
  mutable std::mutex mutex_;
  std::map<std::string, std::pair<std::shared_ptr<Session>, std::string>> sessions_;
  std::vector<std::string> order_;
  std::uint64_t next_id_ = 1;
};

}  // namespace swct::annotd
