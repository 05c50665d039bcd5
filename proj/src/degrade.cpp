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

#include "medinet/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace medinet {

namespace {

float clamp255(double v) { return static_cast<float>(std::clamp(v, 0.0, 255.0)); }

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (std::size_t(i) >= n) return n - 1;
  return std::size_t(i);
}

struct Tap {
  std::size_t i0, i1;
  double t;
};

// Interpolation taps from the centers of the S-wide area cells (the last one
// may be partial) back to every pixel of an axis of length n.
std::vector<Tap> upsample_taps(std::size_t n, std::size_t s) {
  const std::size_t cells = (n + s - 1) / s;
  std::vector<double> center(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const std::size_t end = std::min((i + 1) * s, n);
    center[i] = 0.5 * double(i * s + end - 1);
  }
  std::vector<Tap> taps(n);
  std::size_t j = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const double pos = double(p);
    if (pos <= center.front()) {
      taps[p] = {0, 0, 0.0};
    } else if (pos >= center.back()) {
      taps[p] = {cells - 1, cells - 1, 0.0};
    } else {
      while (center[j + 1] < pos) ++j;
      taps[p] = {j, j + 1, (pos - center[j]) / (center[j + 1] - center[j])};
    }
  }
  return taps;
}

}  // namespace

Tensor to_tensor(const Image& img) {
  return Tensor(Shape{1, img.channels, img.height, img.width}, img.data);
}

Image image_from_tensor(const Tensor& t, std::size_t n) {
  if (n >= t.n()) throw ShapeError("image_from_tensor: sample out of range");
  Image img(t.c(), t.h(), t.w());
  auto s = t.sample(n);
  std::copy(s.begin(), s.end(), img.data.begin());
  return img;
}

void clamp_pixels(Image& img) {
  for (float& v : img.data) v = clamp255(v);
}

double image_mean(const Image& img) {
  double s = 0.0;
  for (float v : img.data) s += v;
  return img.data.empty() ? 0.0 : s / double(img.data.size());
}

double Kernel2D::sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

Kernel2D gaussian_kernel(double sigma, std::size_t ksize) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  }
  if (ksize == 0 || ksize % 2 == 0) {
    throw std::invalid_argument("gaussian_kernel: ksize must be odd, got " +
                                std::to_string(ksize));
  }
  Kernel2D k{ksize, ksize, ksize / 2, ksize / 2,
             std::vector<double>(ksize * ksize)};
  const auto r = static_cast<std::ptrdiff_t>(ksize / 2);
  double total = 0.0;
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    for (std::ptrdiff_t j = -r; j <= r; ++j) {
      const double v = std::exp(-double(i * i + j * j) / (2.0 * sigma * sigma));
      k.values[std::size_t((i + r) * std::ptrdiff_t(ksize) + j + r)] = v;
      total += v;
    }
  }
  for (double& v : k.values) v /= total;
  return k;
}

Kernel2D motion_kernel(std::size_t degree, double angle_deg) {
  if (degree == 0) throw std::invalid_argument("motion_kernel: degree < 1");
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cx = std::cos(theta);
  const double cy = -std::sin(theta);  // image rows grow downwards
  std::vector<std::pair<long, long>> taps;
  long min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  for (std::size_t i = 0; i < degree; ++i) {
    const double t = double(i) - double(degree - 1) / 2.0;
    const long x = long(std::floor(t * cx + 0.5));
    const long y = long(std::floor(t * cy + 0.5));
    taps.emplace_back(y, x);
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
  Kernel2D k;
  k.rows = std::size_t(max_y - min_y + 1);
  k.cols = std::size_t(max_x - min_x + 1);
  k.anchor_row = std::size_t(-min_y);
  k.anchor_col = std::size_t(-min_x);
  k.values.assign(k.rows * k.cols, 0.0);
  const double weight = 1.0 / double(degree);
  for (const auto& [y, x] : taps) {
    k.values[std::size_t(y - min_y) * k.cols + std::size_t(x - min_x)] += weight;
  }
  return k;
}

Image apply_kernel(const Image& img, const Kernel2D& k) {
  Image out(img.channels, img.height, img.width);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (std::size_t r = 0; r < k.rows; ++r) {
          const std::size_t sy = clamp_index(
              std::ptrdiff_t(y + r) - std::ptrdiff_t(k.anchor_row), img.height);
          for (std::size_t q = 0; q < k.cols; ++q) {
            const double kv = k.values[r * k.cols + q];
            if (kv == 0.0) continue;
            const std::size_t sx = clamp_index(
                std::ptrdiff_t(x + q) - std::ptrdiff_t(k.anchor_col), img.width);
            acc += kv * img.at(c, sy, sx);
          }
        }
        out.at(c, y, x) = clamp255(acc);
      }
    }
  }
  return out;
}

Image resample(const Image& img, int scale) {
  if (scale != 1 && scale != 2 && scale != 4 && scale != 6 && scale != 8) {
    throw std::invalid_argument("resample: scale must be one of 1,2,4,6,8");
  }
  if (scale == 1) return img;
  const auto s = std::size_t(scale);
  if (img.height < s || img.width < s) {
    throw std::invalid_argument("resample: image smaller than scale factor");
  }
  const std::size_t lh = (img.height + s - 1) / s;
  const std::size_t lw = (img.width + s - 1) / s;
  const auto taps_y = upsample_taps(img.height, s);
  const auto taps_x = upsample_taps(img.width, s);
  Image out(img.channels, img.height, img.width);
  std::vector<double> low(lh * lw);
  for (std::size_t c = 0; c < img.channels; ++c) {
    // Area average over each S x S cell (partial at the far edges).
    for (std::size_t ly = 0; ly < lh; ++ly) {
      for (std::size_t lx = 0; lx < lw; ++lx) {
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t y = ly * s; y < std::min((ly + 1) * s, img.height); ++y)
          for (std::size_t x = lx * s; x < std::min((lx + 1) * s, img.width);
               ++x) {
            acc += img.at(c, y, x);
            ++count;
          }
        low[ly * lw + lx] = acc / double(count);
      }
    }
    // Bilinear between cell centers, edges clamped.
    for (std::size_t y = 0; y < img.height; ++y) {
      const Tap ty = taps_y[y];
      for (std::size_t x = 0; x < img.width; ++x) {
        const Tap tx = taps_x[x];
        const double top = low[ty.i0 * lw + tx.i0] * (1.0 - tx.t) +
                           low[ty.i0 * lw + tx.i1] * tx.t;
        const double bot = low[ty.i1 * lw + tx.i0] * (1.0 - tx.t) +
                           low[ty.i1 * lw + tx.i1] * tx.t;
        out.at(c, y, x) = clamp255(top * (1.0 - ty.t) + bot * ty.t);
      }
    }
  }
  return out;
}

Image add_awgn(const Image& img, double sigma, RngStream& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("AWGN sigma must be >= 0");
  if (sigma == 0.0) return img;
  Image out = img;
  for (float& v : out.data) v = clamp255(double(v) + sigma * rng.normal());
  return out;
}

Image add_salt_pepper(const Image& img, double rho, RngStream& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("salt-and-pepper rho must be in [0, 1]");
  }
  Image out = img;
  const std::size_t n = img.plane();
  const auto count = static_cast<std::size_t>(std::llround(rho * double(n)));
  if (count == 0) return out;
  // Partial Fisher-Yates: the first `count` slots are a uniform sample of
  // pixel positions without replacement.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(idx[i], idx[i + rng.below(n - i)]);
    const float v = rng.below(2) ? 255.0f : 0.0f;
    for (std::size_t c = 0; c < img.channels; ++c) out.data[c * n + idx[i]] = v;
  }
  return out;
}

Image add_hg(const Image& img, double alpha, double delta, RngStream& rng) {
  if (!(alpha >= 0.0 && delta >= 0.0)) {
    throw std::invalid_argument("HG alpha and delta must be >= 0");
  }
  if (alpha == 0.0 && delta == 0.0) return img;
  Image out = img;
  for (float& v : out.data) {
    const double x = std::max(0.0, double(v));
    const double sd = std::sqrt(alpha * alpha * (x / 255.0) + delta * delta);
    v = clamp255(x + sd * rng.normal());
  }
  return out;
}

std::array<double, 9> MgDraw::covariance(double level) const {
  std::array<double, 9> cov{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += u[i * 3 + k] * lambda[k] * u[j * 3 + k];
      cov[i * 3 + j] = level * level * s;
    }
  return cov;
}

MgDraw draw_mg(RngStream& rng) {
  // Gram-Schmidt on a Gaussian matrix gives R with a positive diagonal,
  // which makes Q Haar-distributed on O(3).
  std::array<double, 9> g{};
  for (double& v : g) v = rng.normal();
  MgDraw d;
  for (int col = 0; col < 3; ++col) {
    double v[3] = {g[0 * 3 + col], g[1 * 3 + col], g[2 * 3 + col]};
    for (int prev = 0; prev < col; ++prev) {
      double dot = 0.0;
      for (int r = 0; r < 3; ++r) dot += v[r] * d.u[r * 3 + prev];
      for (int r = 0; r < 3; ++r) v[r] -= dot * d.u[r * 3 + prev];
    }
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (int r = 0; r < 3; ++r) d.u[r * 3 + col] = v[r] / norm;
  }
  for (double& l : d.lambda) {
    do {
      l = rng.uniform();
    } while (l <= 0.0);
  }
  return d;
}

std::vector<double> mg_noise_field(std::size_t h, std::size_t w, double level,
                                   const MgDraw& draw, RngStream& rng) {
  const std::size_t n = h * w;
  std::vector<double> field(3 * n, 0.0);
  // A = level * U diag(sqrt(lambda)), so A A^T is the target covariance.
  double a[9];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      a[i * 3 + k] = level * draw.u[i * 3 + k] * std::sqrt(draw.lambda[k]);
  for (std::size_t p = 0; p < n; ++p) {
    const double z[3] = {rng.normal(), rng.normal(), rng.normal()};
    for (int i = 0; i < 3; ++i) {
      field[i * n + p] = a[i * 3] * z[0] + a[i * 3 + 1] * z[1] + a[i * 3 + 2] * z[2];
    }
  }
  return field;
}

Image add_mg(const Image& img, double level, RngStream& rng) {
  if (img.channels != 3) {
    throw std::invalid_argument("MG noise needs a 3-channel image");
  }
  if (!(level >= 0.0)) throw std::invalid_argument("MG level must be >= 0");
  if (level == 0.0) return img;
  const MgDraw d = draw_mg(rng);
  const auto field = mg_noise_field(img.height, img.width, level, d, rng);
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = clamp255(double(out.data[i]) + field[i]);
  }
  return out;
}

DegradeTrace degrade_traced(const Image& img, const DegradationConfig& cfg,
                            std::uint64_t stream_id) {
  cfg.validate();
  DegradeTrace t;
  t.blurred = std::visit(
      [&](const auto& b) -> Image {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, GaussianBlur>) {
          return apply_kernel(img, gaussian_kernel(b.sigma, b.ksize));
        } else if constexpr (std::is_same_v<B, MotionBlur>) {
          return apply_kernel(img, motion_kernel(b.degree, b.angle));
        } else {
          return img;
        }
      },
      cfg.blur);
  t.resampled = resample(t.blurred, cfg.scale);
  RngStream rng(cfg.seed, stream_id);
  t.noisy = std::visit(
      [&](const auto& n) -> Image {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, AwgnNoise>) {
          return add_awgn(t.resampled, n.sigma, rng);
        } else if constexpr (std::is_same_v<N, SaltPepperNoise>) {
          return add_salt_pepper(t.resampled, n.rho, rng);
        } else if constexpr (std::is_same_v<N, HgNoise>) {
          return add_hg(t.resampled, n.alpha, n.delta, rng);
        } else if constexpr (std::is_same_v<N, MgNoise>) {
          return add_mg(t.resampled, n.level, rng);
        } else {
          return t.resampled;
        }
      },
      cfg.noise);
  t.output = jpeg_roundtrip(t.noisy, cfg.jpeg);
  return t;
}

Image degrade(const Image& img, const DegradationConfig& cfg,
              std::uint64_t stream_id) {
  return degrade_traced(img, cfg, stream_id).output;
}

}  // namespace medinet
