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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace medinet {
namespace {

Image smooth_image(std::size_t c, std::size_t h, std::size_t w,
                   std::uint64_t seed) {
  RngStream rng(seed, 99);
  Image img(c, h, w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double fy = rng.uniform(0.02, 0.2), fx = rng.uniform(0.02, 0.2);
    const double ph = rng.uniform(0.0, 6.0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        img.at(ch, y, x) =
            float(128.0 + 90.0 * std::sin(fy * y + ph) * std::cos(fx * x + ph));
  }
  return img;
}

void expect_in_range(const Image& img) {
  for (float v : img.data) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 255.0f);
  }
}

// Kernels.

TEST(KernelTest, GaussianSumsToOneWithCentralPeak) {
  const Kernel2D k = gaussian_kernel(3.0, 13);
  EXPECT_NEAR(k.sum(), 1.0, 1e-6);
  EXPECT_EQ(*std::max_element(k.values.begin(), k.values.end()), k.at(6, 6));
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 13; ++j) {
      EXPECT_DOUBLE_EQ(k.at(i, j), k.at(j, i));
      EXPECT_DOUBLE_EQ(k.at(i, j), k.at(12 - i, j));
    }
}

TEST(KernelTest, GaussianFlatLimit) {
  const Kernel2D k = gaussian_kernel(1e6, 3);
  for (double v : k.values) EXPECT_NEAR(v, 1.0 / 9.0, 1e-4);
}

TEST(KernelTest, GaussianClosedFormCenter) {
  const double total = 1.0 + 4.0 * std::exp(-0.5) + 4.0 * std::exp(-1.0);
  EXPECT_NEAR(gaussian_kernel(1.0, 3).at(1, 1), 1.0 / total, 1e-12);
  EXPECT_NEAR(1.0 / total, 0.2042, 1e-4);
}

TEST(KernelTest, GaussianRejectsBadParameters) {
  EXPECT_THROW(gaussian_kernel(1.0, 4), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(0.0, 3), std::invalid_argument);
}

TEST(KernelTest, MotionDegreeOneIsDelta) {
  for (double a : {0.0, 33.0, 90.0}) {
    const Kernel2D k = motion_kernel(1, a);
    EXPECT_EQ(k.rows, 1u);
    EXPECT_EQ(k.cols, 1u);
    EXPECT_EQ(k.values[0], 1.0);
  }
  const Image img = smooth_image(1, 9, 9, 1);
  EXPECT_EQ(apply_kernel(img, motion_kernel(1, 0.0)), img);
}

TEST(KernelTest, MotionHorizontalRow) {
  const Kernel2D k = motion_kernel(10, 0.0);
  EXPECT_EQ(k.rows, 1u);
  ASSERT_EQ(k.cols, 10u);
  for (double v : k.values) EXPECT_DOUBLE_EQ(v, 0.1);
}

TEST(KernelTest, MotionSumsToOne) {
  RngStream rng(3, 0);
  for (int t = 0; t < 200; ++t) {
    const Kernel2D k =
        motion_kernel(1 + rng.below(50), rng.uniform(0.0, 360.0));
    EXPECT_NEAR(k.sum(), 1.0, 1e-6);
  }
  for (double s : {0.3, 1.0, 2.0, 3.0, 7.5})
    for (std::size_t n : {1u, 3u, 13u, 21u})
      EXPECT_NEAR(gaussian_kernel(s, n).sum(), 1.0, 1e-6);
}

// Resampling.

TEST(ResampleTest, ScaleOneIsIdentity) {
  const Image img = smooth_image(3, 17, 23, 2);
  EXPECT_EQ(resample(img, 1), img);
}

TEST(ResampleTest, PreservesConstants) {
  for (int s : {2, 4, 6, 8}) {
    const Image img(1, 21, 30, 77.25f);
    for (float v : resample(img, s).data) EXPECT_NEAR(v, 77.25f, 1e-4);
  }
}

TEST(ResampleTest, CheckerboardCollapsesToMean) {
  Image img(1, 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) img.at(0, y, x) = (x + y) % 2 ? 200 : 40;
  for (float v : resample(img, 8).data) EXPECT_FLOAT_EQ(v, 120.0f);
}

TEST(ResampleTest, PreservesMeanOfSmoothImages) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image img = smooth_image(1, 64, 64, seed);
    for (int s : {2, 4, 6, 8}) {
      const double m0 = image_mean(img), m1 = image_mean(resample(img, s));
      EXPECT_NEAR(m1, m0, 0.01 * m0) << "seed " << seed << " S=" << s;
    }
  }
}

TEST(ResampleTest, RejectsTinyImagesAndBadScales) {
  EXPECT_THROW(resample(Image(1, 4, 10), 8), std::invalid_argument);
  EXPECT_THROW(resample(Image(1, 16, 16), 3), std::invalid_argument);
}

// Noise.

TEST(NoiseTest, ZeroParametersLeaveImageUnchanged) {
  const Image img = smooth_image(3, 16, 16, 4);
  RngStream rng(5, 0);
  EXPECT_EQ(add_awgn(img, 0.0, rng), img);
  EXPECT_EQ(add_salt_pepper(img, 0.0, rng), img);
  EXPECT_EQ(add_hg(img, 0.0, 0.0, rng), img);
  EXPECT_EQ(add_mg(img, 0.0, rng), img);
}

TEST(NoiseTest, AwgnStandardDeviation) {
  const Image img(1, 512, 512, 128.0f);
  RngStream rng(6, 0);
  const Image out = add_awgn(img, 25.0, rng);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double d = double(out.data[i]) - 128.0;
    s += d;
    s2 += d * d;
  }
  const double n = double(out.data.size());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 25.0, 0.5);
}

TEST(NoiseTest, SaltPepperFractionAndValues) {
  const Image img(1, 512, 512, 100.0f);
  RngStream rng(7, 0);
  const Image out = add_salt_pepper(img, 0.05, rng);
  std::size_t altered = 0, salt = 0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (out.data[i] == img.data[i]) continue;
    ++altered;
    ASSERT_TRUE(out.data[i] == 0.0f || out.data[i] == 255.0f);
    salt += out.data[i] == 255.0f;
  }
  const double frac = double(altered) / double(out.data.size());
  EXPECT_NEAR(frac, 0.05, 0.005);
  EXPECT_NEAR(double(salt) / double(altered), 0.5, 0.02);
}

TEST(NoiseTest, SaltPepperHitsAllChannelsOfAPixel) {
  const Image img(3, 64, 64, 100.0f);
  RngStream rng(8, 0);
  const Image out = add_salt_pepper(img, 0.2, rng);
  const std::size_t n = img.plane();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(out.data[i], out.data[n + i]);
    EXPECT_EQ(out.data[i], out.data[2 * n + i]);
  }
}

TEST(NoiseTest, HgVarianceDependsOnIntensity) {
  RngStream rng(9, 0);
  for (float level : {64.0f, 192.0f}) {
    const Image img(1, 400, 400, level);
    const Image out = add_hg(img, 30.0, 10.0, rng);
    double s2 = 0.0;
    for (float v : out.data) s2 += (v - level) * (v - level);
    const double expected = 30.0 * 30.0 * level / 255.0 + 100.0;
    EXPECT_NEAR(s2 / double(out.data.size()), expected, 0.03 * expected);
  }
}

TEST(NoiseTest, MgCovarianceMatchesDraw) {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    RngStream rng(seed, 0);
    const MgDraw d = draw_mg(rng);
    // U is orthogonal.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += d.u[k * 3 + i] * d.u[k * 3 + j];
        EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
      }
    for (double l : d.lambda) {
      EXPECT_GT(l, 0.0);
      EXPECT_LT(l, 1.0);
    }
    const std::size_t h = 400, w = 400, n = h * w;
    const auto f = mg_noise_field(h, w, 75.0, d, rng);
    const auto want = d.covariance(75.0);
    double err = 0.0, norm = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double c = 0.0;
        for (std::size_t p = 0; p < n; ++p) c += f[i * n + p] * f[j * n + p];
        c /= double(n);
        err += std::pow(c - want[i * 3 + j], 2);
        norm += std::pow(want[i * 3 + j], 2);
      }
    EXPECT_LT(std::sqrt(err / norm), 0.05) << "seed " << seed;
  }
}

TEST(NoiseTest, MgRejectsGrayImages) {
  RngStream rng(13, 0);
  EXPECT_THROW(add_mg(Image(1, 8, 8), 75.0, rng), std::invalid_argument);
}

// JPEG.

TEST(JpegTest, QualityZeroIsBypass) {
  const Image img = smooth_image(3, 19, 21, 14);
  EXPECT_EQ(jpeg_roundtrip(img, 0), img);
}

TEST(JpegTest, QualityFiftyKeepsBaseTables) {
  const std::uint16_t luma00 = 16, luma77 = 99, chroma00 = 17, chroma77 = 99;
  const auto l = jpeg_quant_table(50, false);
  const auto c = jpeg_quant_table(50, true);
  EXPECT_EQ(l[0], luma00);
  EXPECT_EQ(l[1], 11);
  EXPECT_EQ(l[8], 12);
  EXPECT_EQ(l[63], luma77);
  EXPECT_EQ(c[0], chroma00);
  EXPECT_EQ(c[3], 47);
  EXPECT_EQ(c[63], chroma77);
}

TEST(JpegTest, IjgScaling) {
  // q=10: scale 500, luma DC 16 -> 80. q=90: scale 20, 16 -> 3.
  EXPECT_EQ(jpeg_quant_table(10, false)[0], 80);
  EXPECT_EQ(jpeg_quant_table(90, false)[0], 3);
  EXPECT_EQ(jpeg_quant_table(1, false)[63], 255);
  for (auto v : jpeg_quant_table(100, true)) EXPECT_EQ(v, 1);
}

TEST(JpegTest, ConstantImageStaysFlat) {
  // A flat block has only a DC term, so every pixel of the block decodes to
  // the same value; the shift from the input is at most half a DC step.
  for (int q : {10, 20, 30, 40, 75, 100}) {
    for (float level : {0.0f, 37.0f, 128.0f, 201.0f, 255.0f}) {
      const Image out = jpeg_roundtrip(Image(1, 24, 24, level), q);
      const auto [lo, hi] = std::minmax_element(out.data.begin(), out.data.end());
      EXPECT_LE(*hi - *lo, 1.0f) << "q=" << q << " level=" << level;
      const double half_step = jpeg_quant_table(q, false)[0] / 16.0;
      EXPECT_LE(std::fabs(*lo - level), half_step + 1.0);
    }
  }
}

TEST(JpegTest, HighQualityIsNearLossless) {
  const Image img = smooth_image(3, 32, 32, 15);
  Image rounded = img;
  for (float& v : rounded.data) v = std::round(v);
  const Image out = jpeg_roundtrip(rounded, 100);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    EXPECT_NEAR(out.data[i], rounded.data[i], 3.0f);
}

TEST(JpegTest, RejectsOutOfRangeQuality) {
  EXPECT_THROW(jpeg_roundtrip(Image(1, 8, 8), 101), std::invalid_argument);
  EXPECT_THROW(jpeg_roundtrip(Image(1, 8, 8), -1), std::invalid_argument);
}

// Pipeline.

Image manual(const Image& img, const DegradationConfig& c, std::uint64_t id) {
  Image x = img;
  if (auto* g = std::get_if<GaussianBlur>(&c.blur))
    x = apply_kernel(x, gaussian_kernel(g->sigma, g->ksize));
  if (auto* m = std::get_if<MotionBlur>(&c.blur))
    x = apply_kernel(x, motion_kernel(m->degree, m->angle));
  x = resample(x, c.scale);
  RngStream rng(c.seed, id);
  if (auto* n = std::get_if<AwgnNoise>(&c.noise)) x = add_awgn(x, n->sigma, rng);
  if (auto* n = std::get_if<SaltPepperNoise>(&c.noise))
    x = add_salt_pepper(x, n->rho, rng);
  if (auto* n = std::get_if<HgNoise>(&c.noise))
    x = add_hg(x, n->alpha, n->delta, rng);
  if (auto* n = std::get_if<MgNoise>(&c.noise)) x = add_mg(x, n->level, rng);
  return jpeg_roundtrip(x, c.jpeg);
}

TEST(DegradeTest, IdentityConfigIsNoOp) {
  const Image img = smooth_image(3, 20, 20, 16);
  const DegradationConfig c;
  EXPECT_TRUE(c.is_identity());
  EXPECT_EQ(degrade(img, c), img);
}

TEST(DegradeTest, GaussianAwgnCombinationMatchesManualComposition) {
  const Image img = smooth_image(3, 48, 40, 17);
  const DegradationConfig c{GaussianBlur{2.0, 13}, 2, AwgnNoise{25.0}, 40, 5};
  EXPECT_EQ(degrade(img, c, 3), manual(img, c, 3));
}

TEST(DegradeTest, ReplayAndSeedSensitivity) {
  const Image img = smooth_image(3, 32, 32, 18);
  DegradationConfig c{MotionBlur{10, 30.0}, 2, HgNoise{30.0, 10.0}, 30, 7};
  const DegradeTrace a = degrade_traced(img, c);
  const DegradeTrace b = degrade_traced(img, c);
  EXPECT_EQ(a.output, b.output);
  c.seed = 8;
  const DegradeTrace d = degrade_traced(img, c);
  EXPECT_EQ(a.blurred, d.blurred);
  EXPECT_EQ(a.resampled, d.resampled);
  EXPECT_NE(a.noisy, d.noisy);
  // Without noise the seed is irrelevant.
  c.noise = NoNoise{};
  const Image x = degrade(img, c);
  c.seed = 9;
  EXPECT_EQ(degrade(img, c), x);
}

TEST(DegradeTest, RandomConfigsMatchManualComposition) {
  RngStream rng(19, 0);
  for (int t = 0; t < 20; ++t) {
    const bool rgb = t % 2 == 0;
    const DegradationConfig c = sample_grid_config(rng, rgb, 100 + t);
    const Image img = smooth_image(rgb ? 3 : 1, 40, 36, t);
    const DegradeTrace tr = degrade_traced(img, c, t);
    EXPECT_EQ(tr.output, manual(img, c, t)) << c.name();
    expect_in_range(tr.blurred);
    expect_in_range(tr.resampled);
    expect_in_range(tr.noisy);
    expect_in_range(tr.output);
  }
}

TEST(DegradeTest, StreamsAreIndependentPerImage) {
  const Image img = smooth_image(1, 16, 16, 20);
  const DegradationConfig c{NoBlur{}, 1, AwgnNoise{15.0}, 0, 1};
  EXPECT_NE(degrade(img, c, 0), degrade(img, c, 1));
}

// Config.

TEST(DegradeConfigTest, JsonRoundTrip) {
  RngStream rng(21, 0);
  for (int t = 0; t < 50; ++t) {
    const DegradationConfig c = sample_grid_config(rng, true, rng.next_u64());
    const nlohmann::json j = to_json(c);
    const DegradationConfig back =
        degradation_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back, c);
    EXPECT_EQ(to_json(back).dump(), j.dump());
  }
  const auto j = to_json(DegradationConfig{});
  for (const char* key : {"blur", "scale", "noise", "jpeg", "seed"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(DegradeConfigTest, RejectsInvalidValues) {
  auto bad = [](DegradationConfig c) {
    EXPECT_THROW(c.validate(), std::invalid_argument) << c.name();
  };
  bad({.blur = GaussianBlur{1.0, 12}});
  bad({.blur = GaussianBlur{-1.0, 13}});
  bad({.scale = 3});
  bad({.noise = AwgnNoise{-1.0}});
  bad({.noise = SaltPepperNoise{1.5}});
  bad({.jpeg = 101});
  EXPECT_THROW(degradation_from_json(nlohmann::json::parse(R"({"blur":1})")),
               std::invalid_argument);
}

TEST(DegradeConfigTest, ParseAndName) {
  const auto c = parse_degradation("gb:3+sp:0.05+s:2+jpeg:40", 1);
  EXPECT_EQ(c.name(), "gb3+sp0.05+s2+c40");
  EXPECT_EQ(parse_degradation("clean", 0).name(), "clean");
  EXPECT_EQ(parse_degradation("hg:30,10", 0).name(), "hg30,10");
  EXPECT_THROW(parse_degradation("blur:2", 0), std::invalid_argument);
  EXPECT_THROW(parse_degradation("awgn", 0), std::invalid_argument);
  EXPECT_THROW(parse_degradation("jpeg:500", 0), std::invalid_argument);
}

TEST(DegradeConfigTest, Grids) {
  const auto single = single_noise_grid(3);
  EXPECT_EQ(single.size(), 3u + 4 + 3 + 4 + 5 + 1 + 4 + 4);
  for (const auto& g : single) {
    EXPECT_NO_THROW(g.config.validate());
    EXPECT_EQ(g.config.seed, 3u);
  }
  const auto comb = combined_grid(3);
  ASSERT_EQ(comb.size(), 8u);
  for (const auto& g : comb) {
    EXPECT_EQ(g.config.scale, 2);
    EXPECT_EQ(g.config.jpeg, 40);
  }
}

}  // namespace
}  // namespace medinet
