#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "swct/annotd/image.hpp"
#include "swct/meshviz/mesh_export.hpp"

namespace swct::annotd {

Axis parse_axis(std::string_view text) {
  if (text == "axial") return Axis::axial;
  if (text == "coronal") return Axis::coronal;
  if (text == "sagittal") return Axis::sagittal;
  throw UsageError("invalid_axis", "axis must be axial, coronal or sagittal, got '" + std::string(text) + "'");
}

std::string_view axis_name(Axis a) {
  switch (a) {
    case Axis::axial: return "axial";
    case Axis::coronal: return "coronal";
    case Axis::sagittal: return "sagittal";
  }
  return "axial";
}

int slice_count(const volcore::Geometry& g, Axis a) {
  switch (a) {
    case Axis::axial: return g.dims[2];
    case Axis::coronal: return g.dims[1];
    case Axis::sagittal: return g.dims[0];
  }
  return 0;
}

namespace {

template <typename T, typename Fn>
Raster extract(const volcore::Grid<T>& grid, Axis a, int index, Fn&& pixel) {
  const auto& g = grid.geometry();
  if (index < 0 || index >= slice_count(g, a))
    throw DataError("index_out_of_range", "slice " + std::to_string(index) + " outside " +
                                              std::string(axis_name(a)) + " range [0, " +
                                              std::to_string(slice_count(g, a) - 1) + "]");
  const auto [nx, ny, nz] = g.dims;
  Raster r;
  switch (a) {
    case Axis::axial: r.width = nx; r.height = ny; break;
    case Axis::coronal: r.width = nx; r.height = nz; break;
    case Axis::sagittal: r.width = ny; r.height = nz; break;
  }
  r.pixels.resize(static_cast<std::size_t>(r.width) * r.height);
  for (int row = 0; row < r.height; ++row)
    for (int col = 0; col < r.width; ++col) {
      T value{};
      switch (a) {
        case Axis::axial: value = grid.at(col, row, index); break;
        case Axis::coronal: value = grid.at(col, index, nz - 1 - row); break;
        case Axis::sagittal: value = grid.at(index, col, nz - 1 - row); break;
      }
      r.pixels[static_cast<std::size_t>(row) * r.width + col] = pixel(value);
    }
  return r;
}

struct WriteBuffer {
  std::string bytes;
};

void write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* buf = static_cast<WriteBuffer*>(png_get_io_ptr(png));
  buf->bytes.append(reinterpret_cast<const char*>(data), n);
}

void flush_fn(png_structp) {}

// libpng reports errors by longjmp; the message is parked here first.
struct ErrorSlot {
  char message[256] = {};
};

void error_fn(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  std::snprintf(slot->message, sizeof slot->message, "%s", msg);
  png_longjmp(png, 1);
}

void warn_fn(png_structp, png_const_charp) {}

// No objects with destructors live between setjmp and the last png call.
bool encode_rows(png_structp png, png_infop info, const Raster& r, const png_color* colors,
                 const png_byte* alpha, int n_colors, WriteBuffer* buf) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, buf, write_fn, flush_fn);
  png_set_IHDR(png, info, r.width, r.height, 8, colors ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (colors) {
    png_set_PLTE(png, info, colors, n_colors);
    png_set_tRNS(png, info, alpha, n_colors, nullptr);
  }
  png_write_info(png, info);
  for (int row = 0; row < r.height; ++row)
    png_write_row(png, r.pixels.data() + static_cast<std::size_t>(row) * r.width);
  png_write_end(png, nullptr);
  return true;
}

std::string encode(const Raster& r, const std::vector<Rgba>* palette) {
  if (r.width <= 0 || r.height <= 0 || r.pixels.size() != static_cast<std::size_t>(r.width) * r.height)
    throw DataError("invalid_raster", "raster size does not match its pixel count");
  std::vector<png_color> colors;
  std::vector<png_byte> alpha;
  if (palette)
    for (const auto& c : *palette) {
      colors.push_back({c[0], c[1], c[2]});
      alpha.push_back(c[3]);
    }
  ErrorSlot err;
  WriteBuffer buf;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, error_fn, warn_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("invalid_png", "cannot allocate PNG writer");
  }
  const bool ok = encode_rows(png, info, r, palette ? colors.data() : nullptr, alpha.data(),
                              static_cast<int>(colors.size()), &buf);
  png_destroy_write_struct(&png, &info);
  if (!ok) throw DataError("invalid_png", err.message);
  return std::move(buf.bytes);
}

struct ReadBuffer {
  const char* data;
  std::size_t size;
  std::size_t pos;
};

void read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* buf = static_cast<ReadBuffer*>(png_get_io_ptr(png));
  if (buf->pos + n > buf->size) png_error(png, "truncated PNG");
  std::memcpy(out, buf->data + buf->pos, n);
  buf->pos += n;
}

struct Header {
  png_uint_32 width = 0, height = 0;
  int depth = 0, color = 0;
};

bool read_header(png_structp png, png_infop info, ReadBuffer* buf, Header* h) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, buf, read_fn);
  png_read_info(png, info);
  h->width = png_get_image_width(png, info);
  h->height = png_get_image_height(png, info);
  h->depth = png_get_bit_depth(png, info);
  h->color = png_get_color_type(png, info);
  return true;
}

bool read_rows(png_structp png, png_uint_32 width, png_uint_32 height, png_bytep pixels) {
  if (setjmp(png_jmpbuf(png))) return false;
  for (png_uint_32 row = 0; row < height; ++row) png_read_row(png, pixels + std::size_t(row) * width, nullptr);
  png_read_end(png, nullptr);
  return true;
}

}  // namespace

std::uint8_t window_hu(double hu, double center, double width) {
  const double v = std::round(255.0 * (hu - (center - width / 2.0)) / width);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

Raster hu_slice(const volcore::Volume3& v, Axis a, int index, double center, double width) {
  if (!(width > 0)) throw UsageError("invalid_window", "window width must be positive");
  return extract(v, a, index, [&](std::int32_t hu) { return window_hu(hu, center, width); });
}

Raster label_slice(const volcore::LabelMap& labels, Axis a, int index) {
  return extract(labels, a, index, [](std::uint8_t code) { return code; });
}

std::vector<Rgba> region_palette() {
  std::vector<Rgba> p(volcore::kMaxRegionCode + 1, Rgba{0, 0, 0, 0});
  for (auto r : volcore::all_regions()) {
    const auto c = meshviz::region_color(r);
    p[static_cast<std::size_t>(r)] = {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                                      static_cast<std::uint8_t>(c[2]), 255};
  }
  return p;
}

std::string encode_gray_png(const Raster& r) { return encode(r, nullptr); }

std::string encode_indexed_png(const Raster& r, const std::vector<Rgba>& palette) {
  if (palette.empty() || palette.size() > 256) throw DataError("invalid_palette", "palette needs 1..256 entries");
  for (auto px : r.pixels)
    if (px >= palette.size()) throw DataError("invalid_palette", "pixel index beyond palette");
  return encode(r, &palette);
}

DecodedPng decode_png(std::string_view bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
    throw DataError("invalid_png", "missing PNG signature");
  ErrorSlot err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, error_fn, warn_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("invalid_png", "cannot allocate PNG reader");
  }
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};

  ReadBuffer buf{bytes.data(), bytes.size(), 0};
  Header h;
  if (!read_header(png, info, &buf, &h)) throw DataError("invalid_png", err.message);
  if (h.depth != 8 || (h.color != PNG_COLOR_TYPE_GRAY && h.color != PNG_COLOR_TYPE_PALETTE))
    throw DataError("invalid_png", "only 8-bit grey or palette PNGs are supported");

  DecodedPng out;
  out.indexed = h.color == PNG_COLOR_TYPE_PALETTE;
  if (out.indexed) {
    png_colorp colors = nullptr;
    int n = 0;
    png_get_PLTE(png, info, &colors, &n);
    png_bytep alpha = nullptr;
    int na = 0;
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_get_tRNS(png, info, &alpha, &na, nullptr);
    for (int c = 0; c < n; ++c)
      out.palette.push_back(
          {colors[c].red, colors[c].green, colors[c].blue, static_cast<std::uint8_t>(c < na ? alpha[c] : 255)});
  }
  out.raster.width = static_cast<int>(h.width);
  out.raster.height = static_cast<int>(h.height);
  out.raster.pixels.resize(std::size_t(h.width) * h.height);
  if (!read_rows(png, h.width, h.height, out.raster.pixels.data())) throw DataError("invalid_png", err.message);
  return out;
}

}  // namespace swct::annotd
