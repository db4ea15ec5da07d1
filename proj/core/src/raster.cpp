// Copyright 2026 The strided-tenet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "stenet/raster.hpp"

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "stenet/errors.hpp"

namespace stenet {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports through these instead of stderr; the message is kept for the
// exception raised after longjmp.
void png_error_to_string(png_structp png, png_const_charp msg) {
  if (auto* out = static_cast<std::string*>(png_get_error_ptr(png))) *out = msg;
  png_longjmp(png, 1);
}
void png_warning_ignore(png_structp, png_const_charp) {}

Raster read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  std::string png_message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &png_message,
                                           png_error_to_string, png_warning_ignore);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  Raster raster;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG " + path.string() + ": " + png_message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  raster.channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  if ((raster.channels != 1 && raster.channels != 3) || (out_depth != 8 && out_depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG layout in " + path.string());
  }
  raster.max_value = out_depth == 16 ? 65535 : 255;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * raster.height);
  rows.resize(raster.height);
  for (int r = 0; r < raster.height; ++r) rows[r] = buffer.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
  raster.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    raster.samples[i] = out_depth == 16
                            ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                            : buffer[i];
  }
  return raster;
}

// Netpbm header token reader that skips whitespace and '#' comments.
class PnmReader {
 public:
  explicit PnmReader(std::string bytes) : bytes_(std::move(bytes)) {}

  long next_int() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("malformed PNM header");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1 << 24) throw FormatError("PNM value too large");
    }
    return v;
  }

  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("malformed PNM header");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  const std::string& bytes() const { return bytes_; }
  void seek(std::size_t p) { pos_ = p; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

Raster read_pnm(std::string bytes, const std::filesystem::path& path) {
  const char kind = bytes[1];
  const bool ascii = kind == '2' || kind == '3';
  PnmReader reader(std::move(bytes));
  reader.seek(2);
  Raster raster;
  raster.channels = (kind == '3' || kind == '6') ? 3 : 1;
  raster.width = static_cast<int>(reader.next_int());
  raster.height = static_cast<int>(reader.next_int());
  raster.max_value = static_cast<int>(reader.next_int());
  if (raster.width < 1 || raster.height < 1 || raster.max_value < 1 || raster.max_value > 65535) {
    throw FormatError("invalid PNM dimensions in " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
  raster.samples.resize(count);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = reader.next_int();
      if (v > raster.max_value) throw FormatError("PNM sample exceeds maxval in " + path.string());
      raster.samples[i] = static_cast<std::uint16_t>(v);
    }
    return raster;
  }
  reader.skip_single_space();
  const std::size_t width = raster.max_value > 255 ? 2 : 1;
  const std::string& data = reader.bytes();
  if (data.size() < reader.pos() + count * width) {
    throw IoError("truncated PNM data in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + reader.pos());
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = width == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];
    if (static_cast<int>(v) > raster.max_value) {
      throw FormatError("PNM sample exceeds maxval in " + path.string());
    }
    raster.samples[i] = static_cast<std::uint16_t>(v);
  }
  return raster;
}

}  // namespace

Raster read_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0) {
    return read_png(path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' &&
      (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6')) {
    return read_pnm(std::move(bytes), path);
  }
  throw FormatError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3) throw FormatError("write_png: 1 or 3 channels");
  if (raster.max_value != 255 && raster.max_value != 65535) {
    throw FormatError("write_png: max_value must be 255 or 65535");
  }
  if (raster.samples.size() !=
      static_cast<std::size_t>(raster.width) * raster.height * raster.channels) {
    throw ShapeError("write_png: sample count does not match dimensions");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  std::string png_message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &png_message,
                                            png_error_to_string, png_warning_ignore);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  const bool wide = raster.max_value == 65535;
  const std::size_t row_samples = static_cast<std::size_t>(raster.width) * raster.channels;
  std::vector<std::uint8_t> buffer(row_samples * raster.height * (wide ? 2 : 1));
  for (std::size_t i = 0; i < raster.samples.size(); ++i) {
    if (wide) {
      buffer[2 * i] = static_cast<std::uint8_t>(raster.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(raster.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(raster.samples[i]);
    }
  }
  std::vector<png_bytep> rows(raster.height);
  for (int r = 0; r < raster.height; ++r) {
    rows[r] = buffer.data() + r * row_samples * (wide ? 2 : 1);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG " + path.string() + ": " + png_message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, raster.width, raster.height, wide ? 16 : 8,
               raster.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace stenet
