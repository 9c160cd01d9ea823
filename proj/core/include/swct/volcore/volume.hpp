#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "swct/error.hpp"

namespace swct {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Index3 = std::array<int, 3>;

}  // namespace swct

namespace swct::volcore {

/// Anatomical region codes. Values are stable across files and reports.
enum class RegionCode : std::uint8_t {
  background = 0,
  tongue = 1,
  soft_palate = 2,
  facial_bones = 3,
  mandible = 4,
  cervical_vertebrae = 5,
  hyoid = 6,
  thyroid_cartilage = 7,
  epiglottis = 8,
  bolus = 9,
};

inline constexpr std::uint8_t kMaxRegionCode = 9;

std::string_view region_name(RegionCode code);
/// Accepts either the numeric code ("6") or the name ("hyoid").
RegionCode parse_region(std::string_view text);
bool is_valid_region_code(std::uint8_t code) noexcept;
/// All non-background codes in ascending order.
std::vector<RegionCode> all_regions();

/// Grid geometry: voxel (0,0,0) center sits at `origin`, axis-aligned spacing.
/// Voxels are laid out x-fastest, then y, then z.
struct Geometry {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t linear(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  Index3 unravel(std::size_t idx) const noexcept {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
  }
  bool contains(int i, int j, int k) const noexcept {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }

  /// Throws DataError("invalid_geometry") when dims < 1 or spacing <= 0.
  void validate() const;

  friend bool operator==(const Geometry& a, const Geometry& b) {
    return a.dims == b.dims && a.spacing == b.spacing && a.origin == b.origin;
  }
};

/// Continuous index of a world point (mm). Out-of-bounds results are returned as is.
Vec3 world_to_index(const Geometry& g, const Vec3& p);
Vec3 index_to_world(const Geometry& g, const Vec3& index);
inline Vec3 voxel_center(const Geometry& g, int i, int j, int k) {
  return index_to_world(g, Vec3(i, j, k));
}

/// Throws DataError("geometry_mismatch") naming `what` when a != b.
void require_same_geometry(const Geometry& a, const Geometry& b, std::string_view what);

/// Immutable scalar grid. Safe to share between threads.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(Geometry geometry, std::vector<T> voxels)
      : geometry_(geometry), voxels_(std::move(voxels)) {
    geometry_.validate();
    if (voxels_.size() != geometry_.voxel_count())
      throw DataError("size_mismatch", "voxel count " + std::to_string(voxels_.size()) +
                                           " does not match dims (" +
                                           std::to_string(geometry_.voxel_count()) + ")");
  }
  Grid(Geometry geometry, T fill) : geometry_(geometry) {
    geometry_.validate();
    voxels_.assign(geometry_.voxel_count(), fill);
  }

  const Geometry& geometry() const noexcept { return geometry_; }
  const Index3& dims() const noexcept { return geometry_.dims; }
  std::size_t size() const noexcept { return voxels_.size(); }
  std::span<const T> voxels() const noexcept { return voxels_; }

  T operator[](std::size_t idx) const noexcept { return voxels_[idx]; }
  T at(int i, int j, int k) const noexcept { return voxels_[geometry_.linear(i, j, k)]; }
  T at_or(int i, int j, int k, T outside) const noexcept {
    return geometry_.contains(i, j, k) ? at(i, j, k) : outside;
  }

  /// Moves the storage out for building a modified copy.
  std::vector<T> release() && { return std::move(voxels_); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.geometry_ == b.geometry_ && a.voxels_ == b.voxels_;
  }

 private:
  Geometry geometry_;
  std::vector<T> voxels_;
};

/// One CT frame in Hounsfield units.
using Volume3 = Grid<std::int32_t>;
/// Per-voxel RegionCode values.
using LabelMap = Grid<std::uint8_t>;
/// Binary mask: a LabelMap restricted to {0,1}.
using Mask = Grid<std::uint8_t>;

std::size_t count_nonzero(const Mask& m);
/// Voxel-center centroid (mm) of nonzero voxels; nullopt when empty.
std::optional<Vec3> mask_centroid(const Mask& m);

/// Binary mask of voxels coded `r`.
Mask extract_region(const LabelMap& labels, RegionCode r);

struct Frame {
  Volume3 volume;
  std::optional<LabelMap> labels;
};

/// One case: ordered frames sharing a geometry.
struct Sequence4D {
  std::string case_id;
  double frame_interval_s = 0.1;
  std::vector<Frame> frames;

  std::size_t frame_count() const noexcept { return frames.size(); }
  const Geometry& geometry() const { return frames.at(0).volume.geometry(); }
};

struct Finding {
  enum class Kind {
    empty_sequence,
    bad_frame_interval,
    geometry_mismatch,
    label_geometry_mismatch,
    invalid_label_code,
  };
  Kind kind;
  int frame = -1;
  std::size_t count = 0;
  std::string message;
};

std::string_view finding_kind_name(Finding::Kind k);

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const noexcept { return findings.empty(); }
};

/// Reports inter-frame geometry mismatches and label-code violations.
/// Never throws; every problem becomes a Finding.
ValidationReport validate_sequence(const Sequence4D& s);

}  // namespace swct::volcore
