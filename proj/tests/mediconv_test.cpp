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

#include "medinet/mediconv.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"

namespace medinet {
namespace {

ConvLayer make_layer(ConvKind kind, Tensor w, std::size_t window = 3,
                     std::size_t stride = 1, bool stop_mu = false) {
  ConvLayerOptions o;
  o.kind = kind;
  o.stride = stride;
  o.median.window = window;
  o.mu_stop_gradient = stop_mu;
  return ConvLayer(std::move(w), o);
}

Tensor delta_kernel(std::size_t c) {
  Tensor w(Shape{c, c, 3, 3});
  for (std::size_t i = 0; i < c; ++i) w.at(i, i, 1, 1) = 1.0f;
  return w;
}

TEST(MeDiConvTest, EqualsCompositionOfStages) {
  RngStream rng(30, 0);
  for (int t = 0; t < 50; ++t) {
    const Shape s{1 + rng.below(3), 1 + rng.below(4), 3 + rng.below(10),
                  3 + rng.below(10)};
    const std::size_t c_out = 1 + rng.below(4);
    const Tensor x = rng_uniform(rng, s, 0.0f, 1.0f);
    const Tensor w = rng_uniform(rng, Shape{c_out, s.c, 3, 3}, -1.0f, 1.0f);
    ConvLayer layer = make_layer(ConvKind::kMedian, w);
    const Tensor y = layer.forward(x);

    const Tensor m = median_filter(x, MedianConfig{}).values;
    const Tensor composed = conv2d(subtract_channel(m, channel_mean(m)), w,
                                   {1, 1});
    ASSERT_LE(max_abs_diff(y, composed), 1e-5f) << "trial " << t;

    const oracle::Grid ref =
        oracle::medi_forward(oracle::Grid(x), oracle::Grid(w), 3, 1);
    for (std::size_t i = 0; i < ref.v.size(); ++i) {
      ASSERT_NEAR(y.data()[i], ref.v[i], 1e-5) << "trial " << t;
    }
  }
}

TEST(MeDiConvTest, ConstantInputGivesZero) {
  RngStream rng(31, 0);
  ConvLayer layer =
      make_layer(ConvKind::kMedian, rng_normal(rng, Shape{4, 2, 3, 3}, 0, 1));
  const Tensor y = layer.forward(Tensor(Shape{2, 2, 7, 7}, 13.0f));
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(MeDiConvTest, DeltaKernelExposesMedianDifference) {
  RngStream rng(32, 0);
  const Tensor x = rng_uniform(rng, Shape{2, 3, 8, 9}, 0.0f, 255.0f);
  ConvLayer layer = make_layer(ConvKind::kMedian, delta_kernel(3));
  const Tensor y = layer.forward(x);
  const Tensor m = median_filter(x, MedianConfig{}).values;
  EXPECT_EQ(y, subtract_channel(m, channel_mean(m)));
}

TEST(MeDiConvTest, StridedMatchesOracle) {
  RngStream rng(33, 0);
  const Tensor x = rng_uniform(rng, Shape{2, 2, 9, 8}, -1.0f, 1.0f);
  const Tensor w = rng_uniform(rng, Shape{3, 2, 3, 3}, -1.0f, 1.0f);
  ConvLayer layer = make_layer(ConvKind::kMedian, w, 3, 2);
  const Tensor y = layer.forward(x);
  const oracle::Grid ref =
      oracle::medi_forward(oracle::Grid(x), oracle::Grid(w), 3, 2);
  ASSERT_EQ(y.numel(), ref.v.size());
  for (std::size_t i = 0; i < ref.v.size(); ++i) {
    EXPECT_NEAR(y.data()[i], ref.v[i], 1e-5);
  }
}

struct GradCase {
  ConvKind kind;
  std::size_t window;
  std::size_t stride;
};

class LayerGradcheckTest : public ::testing::TestWithParam<GradCase> {};

TEST_P(LayerGradcheckTest, WeightsAndInputMatchCentralDifferences) {
  const GradCase gc = GetParam();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 34);
    const Shape s{2, 2, 6, 7};
    const Tensor x = oracle::tie_free(s, rng);
    const Tensor w = rng_uniform(rng, Shape{3, 2, 3, 3}, -1.0f, 1.0f);
    ConvLayer layer = make_layer(gc.kind, w, gc.window, gc.stride);
    const Tensor y = layer.forward(x);
    // Alternate between loss = sum(out) and a random projection.
    const Tensor proj = seed % 2 ? rng_normal(rng, y.shape(), 0.0f, 1.0f)
                                 : Tensor(y.shape(), 1.0f);
    const LayerGradients g = layer.backward(proj);
    ASSERT_EQ(g.d_input.shape(), x.shape());
    ASSERT_EQ(g.d_weights.shape(), w.shape());

    const oracle::Grid pg(proj);
    auto forward = [&](const oracle::Grid& xg, const oracle::Grid& wg) {
      return gc.kind == ConvKind::kMedian
                 ? oracle::medi_forward(xg, wg, gc.window, gc.stride)
                 : oracle::conv2d(xg, wg, 1, gc.stride);
    };
    const oracle::Grid xg(x), wg(w);
    const auto num_w = oracle::central_diff(
        wg, [&](const oracle::Grid& v) { return oracle::dot(forward(xg, v), pg); },
        1e-3);
    const auto num_x = oracle::central_diff(
        xg, [&](const oracle::Grid& v) { return oracle::dot(forward(v, wg), pg); },
        1e-3);
    EXPECT_LT(oracle::max_rel_error(g.d_weights.data(), num_w), 1e-3)
        << "seed " << seed;
    EXPECT_LT(oracle::max_rel_error(g.d_input.data(), num_x), 1e-3)
        << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Kinds, LayerGradcheckTest,
    ::testing::Values(GradCase{ConvKind::kStandard, 3, 1},
                      GradCase{ConvKind::kStandard, 3, 2},
                      GradCase{ConvKind::kMedian, 3, 1},
                      GradCase{ConvKind::kMedian, 5, 1},
                      GradCase{ConvKind::kMedian, 3, 2}),
    [](const ::testing::TestParamInfo<GradCase>& info) {
      return to_string(info.param.kind) + "_w" +
             std::to_string(info.param.window) + "_s" +
             std::to_string(info.param.stride);
    });

TEST(MeDiConvTest, StopGradientTreatsMuAsConstant) {
  RngStream rng(35, 0);
  const Tensor x = oracle::tie_free(Shape{1, 2, 6, 6}, rng);
  const Tensor w = rng_uniform(rng, Shape{2, 2, 3, 3}, -1.0f, 1.0f);
  ConvLayer layer = make_layer(ConvKind::kMedian, w, 3, 1, true);
  const Tensor y = layer.forward(x);
  const Tensor proj = rng_normal(rng, y.shape(), 0.0f, 1.0f);
  const LayerGradients g = layer.backward(proj);

  const auto mu = oracle::plane_means(oracle::median(oracle::Grid(x), 3));
  const oracle::Grid wg(w), pg(proj);
  const auto num_x = oracle::central_diff(
      oracle::Grid(x),
      [&](const oracle::Grid& v) {
        oracle::Grid m = oracle::median(v, 3);
        for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] -= mu[i / 36];
        return oracle::dot(oracle::conv2d(m, wg, 1, 1), pg);
      },
      1e-3);
  EXPECT_LT(oracle::max_rel_error(g.d_input.data(), num_x), 1e-3);
}

TEST(MeDiConvTest, ConstantGradientIsAnnihilated) {
  RngStream rng(36, 0);
  const Tensor x = rng_uniform(rng, Shape{2, 3, 8, 8}, 0.0f, 1.0f);
  // Delta kernel: d(conv input) equals grad_out, a constant per plane.
  ConvLayer layer = make_layer(ConvKind::kMedian, delta_kernel(3));
  layer.forward(x);
  const LayerGradients g = layer.backward(Tensor(Shape{2, 3, 8, 8}, 2.5f));
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (float v : g.d_input.plane(n, c)) s += v;
      EXPECT_NEAR(s, 0.0, 1e-4);
    }
  }
}

TEST(MeDiConvTest, BackwardWithoutForwardIsRejected) {
  const ConvLayer layer = make_layer(ConvKind::kMedian, delta_kernel(1));
  EXPECT_THROW(layer.backward(Tensor(Shape{1, 1, 3, 3})), std::logic_error);
}

TEST(MeDiConvTest, RejectsChannelMismatch) {
  ConvLayer layer = make_layer(ConvKind::kMedian, delta_kernel(2));
  EXPECT_THROW(layer.forward(Tensor(Shape{1, 3, 5, 5})), ShapeError);
}

TEST(MeDiConvTest, SaltPixelInFlatRegionLeavesOutputUnchanged) {
  RngStream rng(37, 0);
  for (int t = 0; t < 20; ++t) {
    // Piecewise-constant plane: four flat quadrants.
    Tensor x(Shape{1, 1, 16, 16});
    const float q[4] = {float(rng.uniform(0, 200)), float(rng.uniform(0, 200)),
                        float(rng.uniform(0, 200)), float(rng.uniform(0, 200))};
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t xx = 0; xx < 16; ++xx)
        x.at(0, 0, y, xx) = q[(y / 8) * 2 + xx / 8];
    const Tensor w = rng_normal(rng, Shape{4, 1, 3, 3}, 0.0f, 1.0f);
    ConvLayer layer = make_layer(ConvKind::kMedian, w);
    const Tensor clean = layer.forward(x);

    float plane_max = 0.0f;
    for (float v : x.data()) plane_max = std::max(plane_max, v);
    Tensor salted = x;
    // Interior of a quadrant: the pixel's 5x5 surroundings are flat.
    const std::size_t y0 = 2 + rng.below(4), x0 = 2 + rng.below(4);
    salted.at(0, 0, y0 + 8 * (t % 2), x0 + 8 * ((t / 2) % 2)) =
        10.0f * std::max(plane_max, 1.0f);
    EXPECT_EQ(layer.forward(salted), clean) << "trial " << t;
  }
}

TEST(MeDiConvTest, ShiftCovariance) {
  RngStream rng(38, 0);
  for (int t = 0; t < 10; ++t) {
    // Random content inside a constant frame, so the median map's value
    // multiset (and hence mu) is unchanged by a one-pixel shift.
    Tensor x(Shape{1, 2, 20, 20}, 50.0f);
    Tensor shifted(x.shape(), 50.0f);
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t y = 5; y < 14; ++y)
        for (std::size_t xx = 5; xx < 14; ++xx) {
          const float v = float(rng.uniform(0, 255));
          x.at(0, c, y, xx) = v;
          shifted.at(0, c, y + 1, xx + 1) = v;
        }
    const Tensor w = rng_normal(rng, Shape{3, 2, 3, 3}, 0.0f, 1.0f);
    ConvLayer layer = make_layer(ConvKind::kMedian, w);
    const Tensor a = layer.forward(x);
    const Tensor b = layer.forward(shifted);
    for (std::size_t o = 0; o < 3; ++o)
      for (std::size_t y = 1; y < 18; ++y)
        for (std::size_t xx = 1; xx < 18; ++xx)
          ASSERT_NEAR(b.at(0, o, y + 1, xx + 1), a.at(0, o, y, xx), 1e-5);
  }
}

TEST(StdConvTest, DeltaIsIdentityAndMatchesConv2d) {
  RngStream rng(39, 0);
  const Tensor x = rng_uniform(rng, Shape{2, 3, 6, 5}, -1.0f, 1.0f);
  ConvLayer id = make_layer(ConvKind::kStandard, delta_kernel(3));
  EXPECT_EQ(id.forward(x), x);
  const Tensor w = rng_uniform(rng, Shape{4, 3, 3, 3}, -1.0f, 1.0f);
  ConvLayer layer = make_layer(ConvKind::kStandard, w, 3, 2);
  EXPECT_EQ(layer.forward(x), conv2d(x, w, {1, 2}));
}

TEST(LayerIoTest, SaveLoadRoundTrip) {
  RngStream rng(40, 0);
  const auto dir = std::filesystem::temp_directory_path() / "medinet_layer_io";
  std::filesystem::create_directories(dir);
  ConvLayer layer = make_layer(ConvKind::kMedian,
                               kaiming_uniform(4, 2, 3, rng), 5, 2, true);
  save_layer(dir / "l0", layer);
  ConvLayer back = load_layer(dir / "l0");
  EXPECT_EQ(back.weights(), layer.weights());
  EXPECT_EQ(back.kind(), ConvKind::kMedian);
  EXPECT_EQ(back.options().median.window, 5u);
  EXPECT_EQ(back.options().stride, 2u);
  EXPECT_TRUE(back.options().mu_stop_gradient);
  std::filesystem::remove_all(dir);
}

TEST(KaimingTest, RespectsFanInBound) {
  RngStream rng(41, 0);
  const Tensor w = kaiming_uniform(16, 8, 3, rng);
  const float bound = std::sqrt(6.0f / 72.0f);
  for (float v : w.data()) {
    ASSERT_LE(std::fabs(v), bound);
  }
}

}  // namespace
}  // namespace medinet
