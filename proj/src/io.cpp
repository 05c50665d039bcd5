// Copyright (c) the medinet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "medinet/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace medinet {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return e;
}

std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0f, 255.0f));
}

// Interleaved 8-bit samples.
std::vector<std::uint8_t> interleave(const Image& img) {
  const std::size_t n = img.plane();
  std::vector<std::uint8_t> out(n * img.channels);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t i = 0; i < n; ++i)
      out[i * img.channels + c] = to_u8(img.data[c * n + i]);
  return out;
}

Image deinterleave(const std::uint8_t* src, std::size_t h, std::size_t w,
                   std::size_t stride_channels, std::size_t keep) {
  Image img(keep, h, w);
  const std::size_t n = h * w;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < keep; ++c)
      img.data[c * n + i] = src[i * stride_channels + c];
  return img;
}

void check_writable(const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw IoError("images must have 1 or 3 channels to be written");
  }
  if (img.height == 0 || img.width == 0) throw IoError("empty image");
}

struct PngReadSource {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(out, src->bytes->data() + src->pos, len);
  src->pos += len;
}

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_error_cb(png_structp png, png_const_charp msg) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

}  // namespace

ImageFormat image_format_for(const std::filesystem::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".png") return ImageFormat::kPng;
  if (e == ".pgm" || e == ".ppm" || e == ".pnm") return ImageFormat::kPnm;
  throw IoError("unsupported image extension '" + e + "' (" + path.string() +
                ")");
}

bool is_image_path(const std::filesystem::path& path) {
  const std::string e = lower_ext(path);
  return e == ".png" || e == ".pgm" || e == ".ppm" || e == ".pnm";
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  check_writable(img);
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_cb, png_warning_cb);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  const auto pixels = interleave(img);
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, png_write_cb, nullptr);
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  for (std::size_t y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(pixels.data() + y * img.width * img.channels);
  }
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError("not a PNG file");
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           png_error_cb, png_warning_cb);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadSource src{&bytes, 0};
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  // Validation errors are raised after cleanup, outside the setjmp scope.
  std::string reject;
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + err);
  }
  png_set_read_fn(png, &src, png_read_cb);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 8) {
    reject = "only 8-bit PNG is supported (bit depth " + std::to_string(depth) +
             ")";
  } else if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    reject = "interlaced PNG is not supported";
  } else if (color == PNG_COLOR_TYPE_PALETTE) {
    reject = "palette PNG is not supported";
  }
  if (reject.empty()) {
    const std::size_t stride = png_get_channels(png, info);
    pixels.resize(std::size_t(h) * w * stride);
    rows.resize(h);
    for (std::size_t y = 0; y < h; ++y) rows[y] = pixels.data() + y * w * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    const std::size_t keep = (color & PNG_COLOR_MASK_COLOR) ? 3 : 1;
    img = deinterleave(pixels.data(), h, w, stride, keep);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!reject.empty()) throw IoError(reject);
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
  check_writable(img);
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") +
                             "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto pixels = interleave(img);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

Image decode_pnm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && pos - start < 9) {
      v = v * 10 + (bytes[pos++] - '0');
    }
    if (pos == start) throw IoError("malformed PNM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw IoError("only binary PGM (P5) and PPM (P6) are supported");
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  const std::size_t w = number();
  const std::size_t h = number();
  const std::size_t maxval = number();
  if (maxval > 255) {
    throw IoError("only 8-bit PNM is supported (maxval " +
                  std::to_string(maxval) + ")");
  }
  if (maxval == 0) throw IoError("malformed PNM header");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw IoError("malformed PNM header");
  }
  ++pos;
  if (bytes.size() - pos < w * h * channels) throw IoError("truncated PNM");
  Image img = deinterleave(bytes.data() + pos, h, w, channels, channels);
  if (maxval != 255) {
    for (float& v : img.data) v = std::nearbyint(v * 255.0f / float(maxval));
  }
  return img;
}

Image read_image(const std::filesystem::path& path) {
  const auto fmt = image_format_for(path);
  const auto bytes = read_file(path);
  try {
    return fmt == ImageFormat::kPng ? decode_png(bytes) : decode_pnm(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_image(const std::filesystem::path& path, const Image& img) {
  const auto fmt = image_format_for(path);
  write_file(path, fmt == ImageFormat::kPng ? encode_png(img) : encode_pnm(img));
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) !=
      1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

Image resize_bilinear(const Image& img, std::size_t h, std::size_t w) {
  if (img.height == h && img.width == w) return img;
  if (img.height == 0 || img.width == 0 || h == 0 || w == 0) {
    throw std::invalid_argument("resize_bilinear: empty extent");
  }
  Image out(img.channels, h, w);
  const double fy = double(img.height) / double(h);
  const double fx = double(img.width) / double(w);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < h; ++y) {
      const double sy =
          std::clamp((y + 0.5) * fy - 0.5, 0.0, double(img.height - 1));
      const std::size_t y0 = std::size_t(sy);
      const std::size_t y1 = std::min(y0 + 1, img.height - 1);
      const double ty = sy - double(y0);
      for (std::size_t x = 0; x < w; ++x) {
        const double sx =
            std::clamp((x + 0.5) * fx - 0.5, 0.0, double(img.width - 1));
        const std::size_t x0 = std::size_t(sx);
        const std::size_t x1 = std::min(x0 + 1, img.width - 1);
        const double tx = sx - double(x0);
        const double top =
            img.at(c, y0, x0) * (1.0 - tx) + img.at(c, y0, x1) * tx;
        const double bot =
            img.at(c, y1, x0) * (1.0 - tx) + img.at(c, y1, x1) * tx;
        out.at(c, y, x) = float(top * (1.0 - ty) + bot * ty);
      }
    }
  return out;
}

Image convert_channels(const Image& img, std::size_t channels) {
  if (img.channels == channels) return img;
  if (img.channels == 3 && channels == 1) {
    Image out(1, img.height, img.width);
    const std::size_t n = img.plane();
    for (std::size_t i = 0; i < n; ++i) {
      out.data[i] = float(0.299 * img.data[i] + 0.587 * img.data[n + i] +
                          0.114 * img.data[2 * n + i]);
    }
    return out;
  }
  if (img.channels == 1 && channels == 3) {
    Image out(3, img.height, img.width);
    for (std::size_t c = 0; c < 3; ++c)
      std::copy(img.data.begin(), img.data.end(),
                out.data.begin() + std::ptrdiff_t(c * img.plane()));
    return out;
  }
  throw std::invalid_argument("convert_channels: unsupported conversion");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace medinet
