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

// Pixel-domain simulation of baseline JPEG. Entropy coding is lossless and
// therefore skipped; everything that changes pixel values is here.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "medinet/degrade.hpp"

namespace medinet {

namespace {

// ITU-T T.81 Annex K tables, natural order.
constexpr std::array<std::uint16_t, 64> kLumaBase = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<std::uint16_t, 64> kChromaBase = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

struct DctBasis {
  // basis[u][x] = C(u) / 2 * cos((2x + 1) u pi / 16)
  double basis[8][8];

  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(0.5) : 1.0;
      for (int x = 0; x < 8; ++x) {
        basis[u][x] =
            0.5 * cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
  }
};

const DctBasis& dct_basis() {
  static const DctBasis b;
  return b;
}

void fdct(const double in[64], double out[64]) {
  const auto& b = dct_basis().basis;
  double tmp[64];
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[u][x] * in[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
}

void idct(const double in[64], double out[64]) {
  const auto& b = dct_basis().basis;
  double tmp[64];
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][x] * in[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v][y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
}

double to_sample(double v) { return std::clamp(std::round(v), 0.0, 255.0); }

// Quantizes one 8-bit component plane in place.
void roundtrip_component(std::vector<double>& plane, std::size_t h,
                         std::size_t w,
                         const std::array<std::uint16_t, 64>& table) {
  double block[64], coef[64];
  for (std::size_t by = 0; by < h; by += 8) {
    for (std::size_t bx = 0; bx < w; bx += 8) {
      // Partial edge blocks are completed by replicating the last row/col.
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
          const std::size_t sy = std::min(by + y, h - 1);
          const std::size_t sx = std::min(bx + x, w - 1);
          block[y * 8 + x] = plane[sy * w + sx] - 128.0;
        }
      fdct(block, coef);
      for (int i = 0; i < 64; ++i) {
        coef[i] = std::round(coef[i] / table[i]) * table[i];
      }
      idct(coef, block);
      for (std::size_t y = 0; y < 8 && by + y < h; ++y)
        for (std::size_t x = 0; x < 8 && bx + x < w; ++x)
          plane[(by + y) * w + bx + x] = to_sample(block[y * 8 + x] + 128.0);
    }
  }
}

}  // namespace

std::array<std::uint16_t, 64> jpeg_quant_table(int quality, bool chroma) {
  if (quality < 1 || quality > 100) {
    throw std::invalid_argument("JPEG quality must be in [1, 100], got " +
                                std::to_string(quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const auto& base = chroma ? kChromaBase : kLumaBase;
  std::array<std::uint16_t, 64> out{};
  for (int i = 0; i < 64; ++i) {
    const long q = (long(base[i]) * scale + 50) / 100;
    out[i] = static_cast<std::uint16_t>(std::clamp(q, 1L, 255L));
  }
  return out;
}

Image jpeg_roundtrip(const Image& img, int quality) {
  if (quality == 0) return img;
  const auto luma = jpeg_quant_table(quality, false);
  const auto chroma = jpeg_quant_table(quality, true);
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("JPEG expects 1 or 3 channels");
  }
  const std::size_t h = img.height, w = img.width, n = img.plane();
  Image out = img;
  if (n == 0) return out;

  if (img.channels == 1) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = to_sample(img.data[i]);
    roundtrip_component(y, h, w, luma);
    for (std::size_t i = 0; i < n; ++i) out.data[i] = float(y[i]);
    return out;
  }

  std::vector<double> yc(n), cb(n), cr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = to_sample(img.data[i]);
    const double g = to_sample(img.data[n + i]);
    const double b = to_sample(img.data[2 * n + i]);
    yc[i] = to_sample(0.299 * r + 0.587 * g + 0.114 * b);
    cb[i] = to_sample(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
    cr[i] = to_sample(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
  }
  roundtrip_component(yc, h, w, luma);
  roundtrip_component(cb, h, w, chroma);
  roundtrip_component(cr, h, w, chroma);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = yc[i], u = cb[i] - 128.0, v = cr[i] - 128.0;
    out.data[i] = float(to_sample(y + 1.402 * v));
    out.data[n + i] = float(to_sample(y - 0.344136 * u - 0.714136 * v));
    out.data[2 * n + i] = float(to_sample(y + 1.772 * u));
  }
  return out;
}

}  // namespace medinet
