#ifndef HOLOQ_TOOLS_PNG_IO_HPP_
#define HOLOQ_TOOLS_PNG_IO_HPP_

#include <holoq/error.hpp>

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace holoq::png {

// Interleaved samples, row-major; 8-bit data is held widened in uint16.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
  std::vector<std::pair<std::string, std::string>> text;

  std::uint16_t at(std::size_t y, std::size_t x, int c) const {
    return samples[(y * width + x) * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
  }
  double max_code() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

namespace detail {

struct File {
  std::FILE* f = nullptr;
  File(const std::filesystem::path& p, const char* mode) : f(std::fopen(p.string().c_str(), mode)) {}
  ~File() {
    if (f) std::fclose(f);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

// libpng reports errors by longjmp; the message is parked here first.
inline thread_local std::string last_error;

[[noreturn]] inline void on_error(png_structp png, png_const_charp msg) {
  last_error = msg ? msg : "unknown error";
  png_longjmp(png, 1);
}
inline void on_warning(png_structp, png_const_charp) {}

}  // namespace detail

namespace detail {

struct ReadInfo {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::size_t rowbytes = 0;
};

// The stage functions hold no C++ objects, so libpng's longjmp skips nothing.
inline bool read_header(png_structp png, png_infop info, std::FILE* f, ReadInfo* out) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    depth = 8;
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->channels = png_get_channels(png, info);
  out->bit_depth = depth;
  out->rowbytes = png_get_rowbytes(png, info);
  return true;
}

inline bool read_rows(png_structp png, png_infop info, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_read_image(png, rows);
  png_read_end(png, info);
  return true;
}

inline bool write_all(png_structp png, png_infop info, std::FILE* f, png_uint_32 w, png_uint_32 h, int depth,
                      int color, png_textp text, int text_count, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (text_count > 0) png_set_text(png, info, text, text_count);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

}  // namespace detail

inline Raster read(const std::filesystem::path& path) {
  detail::File file(path, "rb");
  if (!file.f) throw FormatError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.f) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::on_error, detail::on_warning);
  if (!png) throw FormatError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  auto fail = [&] { return FormatError(path.string() + ": png: " + detail::last_error); };

  detail::ReadInfo hdr;
  if (!info || !detail::read_header(png, info, file.f, &hdr)) throw fail();
  std::vector<unsigned char> buf(hdr.rowbytes * hdr.height);
  std::vector<png_bytep> rows(hdr.height);
  for (std::size_t y = 0; y < hdr.height; ++y) rows[y] = buf.data() + y * hdr.rowbytes;
  if (!detail::read_rows(png, info, rows.data())) throw fail();

  Raster r;
  r.width = hdr.width;
  r.height = hdr.height;
  r.channels = hdr.channels;
  r.bit_depth = hdr.bit_depth;
  const std::size_t row_n = r.width * static_cast<std::size_t>(r.channels);
  r.samples.resize(row_n * r.height);
  for (std::size_t y = 0; y < r.height; ++y) {
    for (std::size_t k = 0; k < row_n; ++k) {
      if (r.bit_depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, rows[y] + 2 * k, 2);
        r.samples[y * row_n + k] = v;
      } else {
        r.samples[y * row_n + k] = rows[y][k];
      }
    }
  }

  png_textp text = nullptr;
  int count = 0;
  if (png_get_text(png, info, &text, &count) > 0) {
    for (int i = 0; i < count; ++i) r.text.emplace_back(text[i].key, text[i].text ? text[i].text : "");
  }
  return r;
}

// Writes 8- or 16-bit gray (1 channel) or RGB (3 channels).
inline void write(const std::filesystem::path& path, const Raster& r) {
  if (r.channels != 1 && r.channels != 3) throw ValueError("png write supports 1 or 3 channels");
  if (r.bit_depth != 8 && r.bit_depth != 16) throw ValueError("png write supports 8 or 16 bits");
  if (r.samples.size() != r.width * r.height * static_cast<std::size_t>(r.channels)) {
    throw ShapeError("png write: sample count does not match dimensions");
  }
  const std::size_t row_n = r.width * static_cast<std::size_t>(r.channels);
  const std::size_t bytes = r.bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> buf(row_n * bytes * r.height);
  std::vector<png_bytep> rows(r.height);
  for (std::size_t y = 0; y < r.height; ++y) {
    rows[y] = buf.data() + y * row_n * bytes;
    for (std::size_t k = 0; k < row_n; ++k) {
      const std::uint16_t v = r.samples[y * row_n + k];
      if (bytes == 2) {
        std::memcpy(rows[y] + 2 * k, &v, 2);
      } else {
        rows[y][k] = static_cast<unsigned char>(v);
      }
    }
  }
  std::vector<png_text> text(r.text.size());
  for (std::size_t i = 0; i < r.text.size(); ++i) {
    text[i] = {};
    text[i].compression = PNG_TEXT_COMPRESSION_NONE;
    text[i].key = const_cast<char*>(r.text[i].first.c_str());
    text[i].text = const_cast<char*>(r.text[i].second.c_str());
  }

  detail::File file(path, "wb");
  if (!file.f) throw FormatError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::on_error, detail::on_warning);
  if (!png) throw FormatError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!info || !detail::write_all(png, info, file.f, static_cast<png_uint_32>(r.width),
                                  static_cast<png_uint_32>(r.height), r.bit_depth,
                                  r.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, text.data(),
                                  static_cast<int>(text.size()), rows.data())) {
    throw FormatError(path.string() + ": png: " + detail::last_error);
  }
}

}  // namespace holoq::png

#endif  // HOLOQ_TOOLS_PNG_IO_HPP_
