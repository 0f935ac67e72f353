// Copyright 2026 The pwsc Authors. All Rights Reserved.
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

#include "pwsc/image_io.h"

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>

#include "pwsc/byte_io.h"
#include "pwsc/error.h"

namespace pwsc {
namespace {

void CheckRgb(const Tensor& image) {
  PWSC_CHECK_ARG(image.rank() == 4 && image.dim(0) == 1 && image.dim(1) == 3 &&
                     image.dim(2) > 0 && image.dim(3) > 0,
                 "image io: expected 1 x 3 x H x W, got " + ShapeString(image.shape()));
}

struct PngReadState {
  std::span<const uint8_t> bytes;
  size_t pos = 0;
};

void PngRead(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->bytes.size() - st->pos < n) png_error(png, "truncated file");
  std::memcpy(out, st->bytes.data() + st->pos, n);
  st->pos += n;
}

void PngWrite(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void PngFlush(png_structp) {}

// libpng reports errors via longjmp; the message is kept for the exception.
void PngError(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  *buf = msg;
  png_longjmp(png, 1);
}

void PngWarning(png_structp, png_const_charp) {}

}  // namespace

uint8_t ToByte(float v) {
  const double s = std::floor(static_cast<double>(v) * 255.0 + 0.5);
  return static_cast<uint8_t>(std::clamp(s, 0.0, 255.0));
}

Tensor DecodeImage(std::span<const uint8_t> bytes) {
  static const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return DecodePng(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return DecodePpm(bytes);
  Fail(ErrorCode::kDataError, "image io: unsupported format (expected PNG or binary PPM)");
}

Tensor DecodePng(std::span<const uint8_t> bytes) {
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, PngError, PngWarning);
  if (png == nullptr) Fail(ErrorCode::kDataError, "png: out of memory");
  png_infop info = png_create_info_struct(png);
  PngReadState st{bytes, 0};
  std::vector<uint8_t> pixels;
  std::vector<png_bytep> rows;
  uint32_t width = 0, height = 0;
  int depth = 0;
  // Locals touched after setjmp are only read on the success path.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCode::kDataError, "png: " + err);
  }
  png_set_read_fn(png, &st, PngRead);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCode::kDataError, "png: unsupported bit depth 16 (8-bit images only)");
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCode::kDataError, "png: unsupported pixel layout");
  }
  pixels.resize(static_cast<size_t>(width) * height * 3);
  rows.resize(height);
  for (uint32_t y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor out({1, 3, static_cast<int>(height), static_cast<int>(width)});
  const size_t n = static_cast<size_t>(width) * height;
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out.data()[c * n + i] = pixels[i * 3 + c] / 255.0f;
  return out;
}

std::vector<uint8_t> EncodePng(const Tensor& image) {
  CheckRgb(image);
  const int h = image.dim(2), w = image.dim(3);
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<uint8_t> pixels(n * 3);
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) pixels[i * 3 + c] = ToByte(image.ptr()[c * n + i]);

  std::string err;
  std::vector<uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, PngError, PngWarning);
  if (png == nullptr) Fail(ErrorCode::kDataError, "png: out of memory");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    Fail(ErrorCode::kDataError, "png: " + err);
  }
  png_set_write_fn(png, &out, PngWrite, PngFlush);
  png_set_IHDR(png, info, static_cast<uint32_t>(w), static_cast<uint32_t>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) rows[static_cast<size_t>(y)] = pixels.data() + static_cast<size_t>(y) * w * 3;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Tensor DecodePpm(std::span<const uint8_t> bytes) {
  size_t pos = 0;
  auto fail = [](const std::string& what) -> void { Fail(ErrorCode::kDataError, "ppm: " + what); };
  // Header tokens separated by whitespace, '#' comments to end of line.
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') t += static_cast<char>(bytes[pos++]);
    if (t.empty()) fail("truncated header");
    return t;
  };
  auto number = [&]() {
    const std::string t = token();
    if (t.size() > 9 || t.find_first_not_of("0123456789") != std::string::npos) fail("bad header field '" + t + "'");
    return std::stoi(t);
  };
  if (token() != "P6") fail("unsupported format (only binary P6)");
  const int w = number(), h = number(), maxval = number();
  if (w <= 0 || h <= 0) fail("empty image");
  if (maxval != 255) fail("unsupported maxval " + std::to_string(maxval) + " (8-bit only)");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("truncated header");
  ++pos;
  const size_t n = static_cast<size_t>(w) * h;
  if (bytes.size() - pos < n * 3) fail("truncated pixel data");
  Tensor out({1, 3, h, w});
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out.data()[c * n + i] = bytes[pos + i * 3 + c] / 255.0f;
  return out;
}

std::vector<uint8_t> EncodePpm(const Tensor& image) {
  CheckRgb(image);
  const int h = image.dim(2), w = image.dim(3);
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  const size_t n = static_cast<size_t>(h) * w;
  out.reserve(out.size() + n * 3);
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out.push_back(ToByte(image.ptr()[c * n + i]));
  return out;
}

Tensor LoadImage(const std::string& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return DecodeImage(bytes);
  } catch (const Error& e) {
    Fail(e.code(), path + ": " + e.what());
  }
}

void SaveImage(const Tensor& image, const std::string& path) {
  const bool ppm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0;
  WriteFileBytes(path, ppm ? EncodePpm(image) : EncodePng(image));
}

}  // namespace pwsc
