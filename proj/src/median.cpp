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

#include "medinet/median.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace medinet {

namespace {

std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

}  // namespace

void MedianConfig::validate() const {
  if (window == 0 || window % 2 == 0) {
    throw std::invalid_argument("median window must be odd and >= 1, got " +
                                std::to_string(window));
  }
}

std::size_t ArgMedianMap::source_index(std::size_t i) const {
  const std::size_t plane = shape.plane();
  const std::size_t base = i - i % plane;
  const auto y = static_cast<std::ptrdiff_t>((i % plane) / shape.w);
  const auto x = static_cast<std::ptrdiff_t>(i % shape.w);
  const auto sy = clamp_index(y + dy[i], static_cast<std::ptrdiff_t>(shape.h));
  const auto sx = clamp_index(x + dx[i], static_cast<std::ptrdiff_t>(shape.w));
  return base + static_cast<std::size_t>(sy) * shape.w +
         static_cast<std::size_t>(sx);
}

MedianResult median_filter(const Tensor& x, const MedianConfig& cfg) {
  cfg.validate();
  const Shape s = x.shape();
  MedianResult res{Tensor(s), ArgMedianMap{s, cfg.window, {}, {}}};
  res.argmap.dy.assign(s.numel(), 0);
  res.argmap.dx.assign(s.numel(), 0);
  if (cfg.window == 1) {  // identity; offsets are already zero
    res.values = x;
    return res;
  }

  const auto r = static_cast<std::ptrdiff_t>(cfg.radius());
  const auto h = static_cast<std::ptrdiff_t>(s.h);
  const auto w = static_cast<std::ptrdiff_t>(s.w);
  const std::size_t count = cfg.window * cfg.window;
  const std::size_t mid = (count - 1) / 2;
  std::vector<float> window(count);
  std::vector<float> scratch(count);

  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const float* src = x.plane(n, c).data();
      const std::size_t base = x.index(n, c, 0, 0);
      float* dst = res.values.plane(n, c).data();
      for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
          std::size_t k = 0;
          for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
            const float* row = src + clamp_index(y + dy, h) * w;
            for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
              window[k++] = row[clamp_index(xx + dx, w)];
            }
          }
          std::copy(window.begin(), window.end(), scratch.begin());
          std::nth_element(scratch.begin(), scratch.begin() + mid,
                           scratch.end());
          const float med = scratch[mid];
          const auto hit = static_cast<std::ptrdiff_t>(
              std::find(window.begin(), window.end(), med) - window.begin());
          const std::size_t out = base + std::size_t(y * w + xx);
          dst[y * w + xx] = med;
          res.argmap.dy[out] = static_cast<std::int16_t>(hit / (2 * r + 1) - r);
          res.argmap.dx[out] = static_cast<std::int16_t>(hit % (2 * r + 1) - r);
        }
      }
    }
  }
  return res;
}

Tensor median_backward(const Tensor& grad_out, const ArgMedianMap& argmap) {
  if (grad_out.shape() != argmap.shape ||
      argmap.dy.size() != argmap.shape.numel() ||
      argmap.dx.size() != argmap.shape.numel()) {
    throw ShapeError("median_backward: grad_out " + grad_out.shape().str() +
                     " does not match argmedian map " + argmap.shape.str());
  }
  Tensor grad_in(grad_out.shape());
  auto g = grad_out.data();
  auto d = grad_in.data();
  // Sequential scatter keeps the accumulation order fixed.
  for (std::size_t i = 0; i < g.size(); ++i) d[argmap.source_index(i)] += g[i];
  return grad_in;
}

U8Plane to_u8_plane(std::span<const float> plane, std::size_t h,
                    std::size_t w) {
  if (plane.size() != h * w) throw ShapeError("to_u8_plane: size mismatch");
  U8Plane out{h, w, std::vector<std::uint8_t>(h * w)};
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const float v = std::clamp(std::nearbyint(plane[i]), 0.0f, 255.0f);
    out.data[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

Tensor from_u8_plane(const U8Plane& p) {
  Tensor t(Shape{1, 1, p.h, p.w});
  auto d = t.data();
  for (std::size_t i = 0; i < p.data.size(); ++i) d[i] = p.data[i];
  return t;
}

namespace {

constexpr std::size_t kBins = 256;
constexpr std::size_t kCoarse = 16;

struct Histogram {
  std::array<std::uint16_t, kBins> fine{};
  std::array<std::uint16_t, kCoarse> coarse{};

  void add(std::uint8_t v) {
    ++fine[v];
    ++coarse[v >> 4];
  }
  void remove(std::uint8_t v) {
    --fine[v];
    --coarse[v >> 4];
  }
  void add(const Histogram& o) {
    for (std::size_t i = 0; i < kBins; ++i) fine[i] += o.fine[i];
    for (std::size_t i = 0; i < kCoarse; ++i) coarse[i] += o.coarse[i];
  }
  void subtract(const Histogram& o) {
    for (std::size_t i = 0; i < kBins; ++i) fine[i] -= o.fine[i];
    for (std::size_t i = 0; i < kCoarse; ++i) coarse[i] -= o.coarse[i];
  }
  // Value of the element with 0-based rank `rank` in sorted order.
  std::uint8_t select(std::size_t rank) const {
    std::size_t acc = 0;
    std::size_t b = 0;
    while (acc + coarse[b] <= rank) acc += coarse[b++];
    std::size_t v = b << 4;
    while (acc + fine[v] <= rank) acc += fine[v++];
    return static_cast<std::uint8_t>(v);
  }
};

}  // namespace

U8Plane median_filter_hist_u8(const U8Plane& x, const MedianConfig& cfg) {
  cfg.validate();
  if (cfg.window > 255) {
    throw std::invalid_argument(
        "median_filter_hist_u8: window must be <= 255 (16-bit bin counts)");
  }
  if (x.data.size() != x.h * x.w) {
    throw ShapeError("median_filter_hist_u8: plane size mismatch");
  }
  if (cfg.window == 1) return x;
  U8Plane out{x.h, x.w, std::vector<std::uint8_t>(x.data.size())};
  if (x.data.empty()) return out;

  const auto r = static_cast<std::ptrdiff_t>(cfg.radius());
  const auto h = static_cast<std::ptrdiff_t>(x.h);
  const auto w = static_cast<std::ptrdiff_t>(x.w);
  const std::size_t rank = (cfg.window * cfg.window - 1) / 2;
  auto px = [&](std::ptrdiff_t y, std::ptrdiff_t xx) {
    return x.data[std::size_t(clamp_index(y, h) * w + xx)];
  };

  // Column histograms cover rows clamp(y - r .. y + r) of each real column.
  std::vector<Histogram> cols(x.w);
  for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
    for (std::ptrdiff_t dy = -r; dy <= r; ++dy) cols[xx].add(px(dy, xx));
  }

  Histogram kernel;
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    kernel = Histogram{};
    for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
      kernel.add(cols[clamp_index(dx, w)]);
    }
    std::uint8_t* dst = out.data.data() + y * w;
    for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
      dst[xx] = kernel.select(rank);
      if (xx + 1 < w) {
        kernel.subtract(cols[clamp_index(xx - r, w)]);
        kernel.add(cols[clamp_index(xx + r + 1, w)]);
      }
    }
    if (y + 1 < h) {
      for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
        cols[xx].remove(px(y - r, xx));
        cols[xx].add(px(y + r + 1, xx));
      }
    }
  }
  return out;
}

Tensor mrelbp_ci(const Tensor& x, const MedianConfig& cfg) {
  const MedianResult med = median_filter(x, cfg);
  const ChannelScalars mu = channel_mean(med.values);
  Tensor out(x.shape());
  for (std::size_t n = 0; n < x.n(); ++n) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      const double m = mu.at(n, c);
      auto src = med.values.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = double(src[i]) - m >= 0.0 ? 1.0f : 0.0f;
      }
    }
  }
  return out;
}

}  // namespace medinet
