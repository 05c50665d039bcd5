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

#ifndef MEDINET_DEGRADE_HPP_
#define MEDINET_DEGRADE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "medinet/rng.hpp"
#include "medinet/tensor.hpp"

namespace medinet {

// Planar (channel-major) image with 1 or 3 channels. Values are reals in
// [0, 255]; they are only rounded to integers by the JPEG stage and by file
// output.
struct Image {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t plane() const { return height * width; }
  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
  bool operator==(const Image&) const = default;
};

Tensor to_tensor(const Image& img);
// Takes sample `n` of a (N, 1|3, H, W) tensor.
Image image_from_tensor(const Tensor& t, std::size_t n = 0);
void clamp_pixels(Image& img);
double image_mean(const Image& img);

// 2-D kernel applied as a correlation; the anchor sits on the output pixel.
struct Kernel2D {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t anchor_row = 0;
  std::size_t anchor_col = 0;
  std::vector<double> values{1.0};

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double sum() const;
};

// exp(-(i^2 + j^2) / (2 sigma^2)) on a centered ksize grid, normalized.
Kernel2D gaussian_kernel(double sigma, std::size_t ksize);
// `degree` equally weighted taps along a line at `angle_deg` (counter-
// clockwise from the +x axis), rasterized by rounding to the nearest pixel
// and cropped to the touched bounding box.
Kernel2D motion_kernel(std::size_t degree, double angle_deg);
// Correlation with replicate borders, output clamped to [0, 255].
Image apply_kernel(const Image& img, const Kernel2D& k);

// Area-average down by `scale`, bilinear back up to the original size.
Image resample(const Image& img, int scale);

Image add_awgn(const Image& img, double sigma, RngStream& rng);
Image add_salt_pepper(const Image& img, double rho, RngStream& rng);
// Per-value variance alpha^2 * (x / 255) + delta^2, in 8-bit units.
Image add_hg(const Image& img, double alpha, double delta, RngStream& rng);

// One multivariate-Gaussian draw: U Haar-random orthogonal, lambda in (0,1).
struct MgDraw {
  std::array<double, 9> u{};       // row-major 3x3
  std::array<double, 3> lambda{};
  // level^2 * U diag(lambda) U^T, row-major.
  std::array<double, 9> covariance(double level) const;
};
MgDraw draw_mg(RngStream& rng);
// Unclamped per-pixel 3-vectors (planar, 3 x h x w) distributed as
// N(0, level^2 U diag(lambda) U^T) with U, lambda from `draw`.
std::vector<double> mg_noise_field(std::size_t h, std::size_t w, double level,
                                   const MgDraw& draw, RngStream& rng);
// Draws U and lambda, then the field, from the same stream. Rejects
// single-channel images.
Image add_mg(const Image& img, double level, RngStream& rng);

// IJG quality-scaled table in natural (row-major) order.
std::array<std::uint16_t, 64> jpeg_quant_table(int quality, bool chroma);
// Lossy part of baseline JPEG: YCbCr 4:4:4, 8x8 DCT, quantize, dequantize,
// inverse DCT, clamp. quality 0 is a bypass. Output is integer-valued.
Image jpeg_roundtrip(const Image& img, int quality);

struct NoBlur {};
struct GaussianBlur {
  double sigma = 1.0;
  std::size_t ksize = 13;
};
struct MotionBlur {
  std::size_t degree = 10;
  double angle = 0.0;
};
using BlurSpec = std::variant<NoBlur, GaussianBlur, MotionBlur>;

struct NoNoise {};
struct AwgnNoise {
  double sigma = 0.0;
};
struct SaltPepperNoise {
  double rho = 0.0;
};
struct HgNoise {
  double alpha = 0.0;
  double delta = 0.0;
};
struct MgNoise {
  double level = 0.0;
};
using NoiseSpec =
    std::variant<NoNoise, AwgnNoise, SaltPepperNoise, HgNoise, MgNoise>;

// I_d = ((I conv k) down_S + n) JPEG_C, each stage optional.
struct DegradationConfig {
  BlurSpec blur = NoBlur{};
  int scale = 1;
  NoiseSpec noise = NoNoise{};
  int jpeg = 0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
  bool is_identity() const;
  // Short tag such as "gb3+sp0.05+s2+c40" or "clean".
  std::string name() const;
  bool operator==(const DegradationConfig&) const;
};

nlohmann::json to_json(const DegradationConfig& cfg);
DegradationConfig degradation_from_json(const nlohmann::json& j);

struct DegradeTrace {
  Image blurred;
  Image resampled;
  Image noisy;
  Image output;
};

// Stage functions applied in order; the noise stage draws from
// RngStream(cfg.seed, stream_id).
DegradeTrace degrade_traced(const Image& img, const DegradationConfig& cfg,
                            std::uint64_t stream_id = 0);
Image degrade(const Image& img, const DegradationConfig& cfg,
              std::uint64_t stream_id = 0);

struct NamedDegradation {
  std::string name;
  DegradationConfig config;
};

// Single-noise sweep: gaussian blur sigma {1,2,3}, motion D {10..40},
// AWGN sigma {15,25,50}, S&P rho {5,10,15,20}%, HG pairs, MG L=75,
// JPEG C {10..40}, scale S {2,4,6,8}.
std::vector<NamedDegradation> single_noise_grid(std::uint64_t seed);
// {GB, MB} x {AWGN, SP, HG, MG}, each with S=2 and C=40.
std::vector<NamedDegradation> combined_grid(std::uint64_t seed);
// Draws every stage parameter from its grid (blur none/gaussian/motion with
// a uniform angle in [0, 180), S, noise type and level, C). MG is only drawn
// for 3-channel inputs.
DegradationConfig sample_grid_config(RngStream& rng, bool rgb,
                                     std::uint64_t seed);
// Parses "clean", "sp:0.1", "awgn:25", "gb:2", "mb:20", "hg:30,10",
// "mg:75", "jpeg:40", "scale:4", or '+'-joined combinations.
DegradationConfig parse_degradation(const std::string& spec,
                                    std::uint64_t seed);

}  // namespace medinet

#endif  // MEDINET_DEGRADE_HPP_
