#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "swct/volcore/volume.hpp"

namespace swct::annotd {

enum class Axis { axial, coronal, sagittal };

/// "axial" | "coronal" | "sagittal"; throws UsageError("invalid_axis").
Axis parse_axis(std::string_view text);
std::string_view axis_name(Axis a);
/// Number of slices along `a`.
int slice_count(const volcore::Geometry& g, Axis a);

/// 8-bit single-channel raster, row-major, top row first.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Axial slices show x across and y down; coronal and sagittal slices put
/// superior (+z) at the top with x or y across. Throws DataError("index_out_of_range").
Raster hu_slice(const volcore::Volume3& v, Axis a, int index, double center, double width);
/// Region codes of one slice, same layout as hu_slice.
Raster label_slice(const volcore::LabelMap& labels, Axis a, int index);

/// Window mapping: round(255 * (hu - (c - w/2)) / w), clamped to [0, 255].
std::uint8_t window_hu(double hu, double center, double width);

using Rgba = std::array<std::uint8_t, 4>;
/// Palette indexed by region code; background is fully transparent.
std::vector<Rgba> region_palette();

std::string encode_gray_png(const Raster& r);
std::string encode_indexed_png(const Raster& r, const std::vector<Rgba>& palette);

struct DecodedPng {
  Raster raster;  // grey values or palette indices
  bool indexed = false;
  std::vector<Rgba> palette;
};
/// Throws DataError("invalid_png").
DecodedPng decode_png(std::string_view bytes);

}  // namespace swct::annotd
