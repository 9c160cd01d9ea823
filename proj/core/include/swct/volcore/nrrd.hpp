#pragma once

#include <filesystem>

#include "swct/volcore/volume.hpp"

namespace swct::volcore {

enum class Encoding { raw, gzip };

/// Reads a 3-D NRRD (NRRD0004, attached payload, little endian, raw or gzip,
/// diagonal space directions). int16/int32/float32 payloads become int32 HU;
/// float values are rounded to the nearest integer.
Volume3 load_volume(const std::filesystem::path& path);

/// Reads a uint8 NRRD of region codes.
LabelMap load_labels(const std::filesystem::path& path);

/// Writes int16 when every value fits, int32 otherwise.
void save_volume(const Volume3& v, const std::filesystem::path& path,
                 Encoding encoding = Encoding::raw);
void save_labels(const LabelMap& l, const std::filesystem::path& path,
                 Encoding encoding = Encoding::raw);

}  // namespace swct::volcore
