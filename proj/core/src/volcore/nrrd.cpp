#include "swct/volcore/nrrd.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace swct::volcore {

static_assert(std::endian::native == std::endian::little, "NRRD IO assumes a little-endian host");

namespace {

enum class ScalarType { uint8, int16, int32, float32 };

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::uint8: return 1;
    case ScalarType::int16: return 2;
    case ScalarType::int32:
    case ScalarType::float32: return 4;
  }
  return 0;
}

std::string_view scalar_name(ScalarType t) {
  switch (t) {
    case ScalarType::uint8: return "uint8";
    case ScalarType::int16: return "int16";
    case ScalarType::int32: return "int32";
    case ScalarType::float32: return "float";
  }
  return "";
}

ScalarType parse_scalar(const std::string& s, const std::filesystem::path& path) {
  static const std::map<std::string, ScalarType> kTypes = {
      {"uchar", ScalarType::uint8},         {"unsigned char", ScalarType::uint8},
      {"uint8", ScalarType::uint8},         {"uint8_t", ScalarType::uint8},
      {"short", ScalarType::int16},         {"short int", ScalarType::int16},
      {"signed short", ScalarType::int16},  {"signed short int", ScalarType::int16},
      {"int16", ScalarType::int16},         {"int16_t", ScalarType::int16},
      {"int", ScalarType::int32},           {"signed int", ScalarType::int32},
      {"int32", ScalarType::int32},         {"int32_t", ScalarType::int32},
      {"float", ScalarType::float32},       {"float32", ScalarType::float32}};
  auto it = kTypes.find(s);
  if (it == kTypes.end())
    throw DataError("unsupported_type", path.string() + ": unsupported NRRD type '" + s + "'");
  return it->second;
}

struct Header {
  ScalarType type = ScalarType::uint8;
  Geometry geometry;
  bool gzip = false;
};

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& why) {
  throw DataError("malformed_header", path.string() + ": " + why);
}

std::vector<Vec3> parse_vectors(const std::string& text, const std::filesystem::path& path) {
  std::vector<Vec3> out;
  std::size_t pos = 0;
  while ((pos = text.find('(', pos)) != std::string::npos) {
    const auto end = text.find(')', pos);
    if (end == std::string::npos) malformed(path, "unbalanced parenthesis in vector");
    std::string inner = text.substr(pos + 1, end - pos - 1);
    std::replace(inner.begin(), inner.end(), ',', ' ');
    std::istringstream is(inner);
    Vec3 v;
    if (!(is >> v.x() >> v.y() >> v.z())) malformed(path, "bad vector '" + inner + "'");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

Header parse_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("NRRD000", 0) != 0) malformed(path, "missing NRRD magic");
  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    if (line[0] == '#') continue;
    auto sep = line.find(": ");
    if (sep == std::string::npos) {
      if (line.find(":=") != std::string::npos) continue;  // key/value pairs
      malformed(path, "bad header line '" + line + "'");
    }
    fields[trim(line.substr(0, sep))] = trim(line.substr(sep + 2));
  }
  if (!in) malformed(path, "header not terminated by a blank line");

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) malformed(path, "missing field '" + key + "'");
    return it->second;
  };

  Header h;
  h.type = parse_scalar(need("type"), path);
  if (need("dimension") != "3") malformed(path, "only dimension 3 is supported");

  {
    std::istringstream is(need("sizes"));
    for (int a = 0; a < 3; ++a)
      if (!(is >> h.geometry.dims[a]) || h.geometry.dims[a] < 1) malformed(path, "bad sizes");
  }

  if (fields.count("data file") || fields.count("datafile"))
    throw DataError("unsupported_encoding", path.string() + ": detached data files are not supported");

  const std::string encoding = need("encoding");
  if (encoding == "raw")
    h.gzip = false;
  else if (encoding == "gzip" || encoding == "gz")
    h.gzip = true;
  else
    throw DataError("unsupported_encoding", path.string() + ": unsupported encoding '" + encoding + "'");

  if (h.type != ScalarType::uint8) {
    auto it = fields.find("endian");
    if (it == fields.end()) malformed(path, "missing field 'endian'");
    if (it->second != "little")
      throw DataError("unsupported_encoding", path.string() + ": only little endian is supported");
  }

  const auto dirs = parse_vectors(need("space directions"), path);
  if (dirs.size() != 3) malformed(path, "space directions must list three vectors");
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b)
      if (a != b && dirs[a][b] != 0.0) malformed(path, "only diagonal space directions are supported");
    h.geometry.spacing[a] = dirs[a][a];
  }
  const auto origin = parse_vectors(need("space origin"), path);
  if (origin.size() != 1) malformed(path, "bad space origin");
  h.geometry.origin = origin[0];
  try {
    h.geometry.validate();
  } catch (const DataError& e) {
    malformed(path, e.what());
  }
  return h;
}

std::vector<char> gunzip(const std::vector<char>& in, std::size_t expected,
                         const std::filesystem::path& path) {
  std::vector<char> out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
    throw DataError("corrupt_payload", path.string() + ": zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc == Z_BUF_ERROR || (rc == Z_OK && produced == expected))
    throw DataError("size_mismatch", path.string() + ": gzip payload larger than header sizes");
  if (rc != Z_STREAM_END) throw DataError("corrupt_payload", path.string() + ": bad gzip payload");
  if (produced != expected)
    throw DataError("size_mismatch", path.string() + ": payload has " + std::to_string(produced) +
                                         " bytes, header implies " + std::to_string(expected));
  return out;
}

std::vector<char> gzip(const char* data, std::size_t n) {
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw DataError("io_error", "zlib init failed");
  std::vector<char> out(deflateBound(&zs, static_cast<uLong>(n)) + 32);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data));
  zs.avail_in = static_cast<uInt>(n);
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw DataError("io_error", "gzip compression failed");
  return out;
}

struct Payload {
  Header header;
  std::vector<char> bytes;
};

Payload read_payload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("file_not_found", "cannot open " + path.string());
  Payload p;
  p.header = parse_header(in, path);
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = p.header.geometry.voxel_count() * scalar_size(p.header.type);
  if (p.header.gzip) {
    p.bytes = gunzip(rest, expected, path);
  } else {
    if (rest.size() != expected)
      throw DataError("size_mismatch", path.string() + ": payload has " + std::to_string(rest.size()) +
                                           " bytes, header implies " + std::to_string(expected));
    p.bytes = std::move(rest);
  }
  return p;
}

template <typename T>
std::vector<T> decode(const std::vector<char>& bytes) {
  std::vector<T> out(bytes.size() / sizeof(T));
  std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
  return out;
}

void write_file(const std::filesystem::path& path, ScalarType type, const Geometry& g,
                const char* data, std::size_t n, Encoding enc) {
  std::ostringstream hdr;
  hdr << std::setprecision(17);
  hdr << "NRRD0004\n"
      << "# written by swct " << SWCT_VERSION << "\n"
      << "type: " << scalar_name(type) << "\n"
      << "dimension: 3\n"
      << "space dimension: 3\n"
      << "sizes: " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n"
      << "space directions: (" << g.spacing[0] << ",0,0) (0," << g.spacing[1] << ",0) (0,0,"
      << g.spacing[2] << ")\n"
      << "space origin: (" << g.origin[0] << "," << g.origin[1] << "," << g.origin[2] << ")\n";
  if (type != ScalarType::uint8) hdr << "endian: little\n";
  hdr << "encoding: " << (enc == Encoding::gzip ? "gzip" : "raw") << "\n\n";

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("io_error", "cannot write " + path.string());
  const std::string h = hdr.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  if (enc == Encoding::gzip) {
    const auto z = gzip(data, n);
    out.write(z.data(), static_cast<std::streamsize>(z.size()));
  } else {
    out.write(data, static_cast<std::streamsize>(n));
  }
  if (!out) throw DataError("io_error", "write failed: " + path.string());
}

}  // namespace

Volume3 load_volume(const std::filesystem::path& path) {
  auto p = read_payload(path);
  std::vector<std::int32_t> hu;
  switch (p.header.type) {
    case ScalarType::int16: {
      const auto v = decode<std::int16_t>(p.bytes);
      hu.assign(v.begin(), v.end());
      break;
    }
    case ScalarType::int32: hu = decode<std::int32_t>(p.bytes); break;
    case ScalarType::float32: {
      const auto v = decode<float>(p.bytes);
      hu.resize(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || std::fabs(v[i]) > 2.0e9f)
          throw DataError("non_finite_hu", path.string() + ": non-finite or out-of-range HU value");
        hu[i] = static_cast<std::int32_t>(std::lround(v[i]));
      }
      break;
    }
    case ScalarType::uint8:
      throw DataError("unsupported_type", path.string() + ": uint8 is reserved for label maps");
  }
  return Volume3(p.header.geometry, std::move(hu));
}

LabelMap load_labels(const std::filesystem::path& path) {
  auto p = read_payload(path);
  if (p.header.type != ScalarType::uint8)
    throw DataError("unsupported_type", path.string() + ": label maps must be uint8");
  std::vector<std::uint8_t> codes(p.bytes.begin(), p.bytes.end());
  return LabelMap(p.header.geometry, std::move(codes));
}

void save_volume(const Volume3& v, const std::filesystem::path& path, Encoding encoding) {
  const auto vox = v.voxels();
  const auto [lo, hi] = std::minmax_element(vox.begin(), vox.end());
  const bool fits16 = vox.empty() || (*lo >= std::numeric_limits<std::int16_t>::min() &&
                                      *hi <= std::numeric_limits<std::int16_t>::max());
  if (fits16) {
    std::vector<std::int16_t> narrow(vox.begin(), vox.end());
    write_file(path, ScalarType::int16, v.geometry(), reinterpret_cast<const char*>(narrow.data()),
               narrow.size() * sizeof(std::int16_t), encoding);
  } else {
    write_file(path, ScalarType::int32, v.geometry(), reinterpret_cast<const char*>(vox.data()),
               vox.size() * sizeof(std::int32_t), encoding);
  }
}

void save_labels(const LabelMap& l, const std::filesystem::path& path, Encoding encoding) {
  const auto vox = l.voxels();
  write_file(path, ScalarType::uint8, l.geometry(), reinterpret_cast<const char*>(vox.data()),
             vox.size(), encoding);
}

}  // namespace swct::volcore
