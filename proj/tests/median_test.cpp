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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "medinet/rng.hpp"
#include "oracles.hpp"

namespace medinet {
namespace {

MedianConfig window(std::size_t w) {
  MedianConfig cfg;
  cfg.window = w;
  return cfg;
}

Tensor random_ints(RngStream& rng, Shape s, int levels) {
  Tensor t(s);
  for (float& v : t.data()) v = float(rng.below(levels));
  return t;
}

U8Plane random_u8(RngStream& rng, std::size_t h, std::size_t w) {
  U8Plane p{h, w, std::vector<std::uint8_t>(h * w)};
  for (auto& v : p.data) v = static_cast<std::uint8_t>(rng.below(256));
  return p;
}

TEST(MedianFilterTest, ConstantPlaneStaysConstant) {
  for (std::size_t w : {1u, 3u, 5u, 9u}) {
    const Tensor x(Shape{1, 2, 6, 7}, 42.5f);
    EXPECT_EQ(median_filter(x, window(w)).values, x);
  }
}

TEST(MedianFilterTest, SingleOutlierIsSuppressed) {
  Tensor x(Shape{1, 1, 5, 5});
  x.at(0, 0, 2, 2) = 255.0f;
  const Tensor y = median_filter(x, window(3)).values;
  for (float v : y.data()) EXPECT_EQ(v, 0.0f);
}

TEST(MedianFilterTest, ReplicateBorderCorner) {
  const Tensor x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
  const MedianResult r = median_filter(x, window(3));
  // Padded window at (0,0): {1,1,2, 1,1,2, 3,3,4} -> sorted median 2.
  EXPECT_EQ(r.values.at(0, 0, 0, 0), 2.0f);
  const oracle::Grid ref = oracle::median(oracle::Grid(x), 3);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.values.data()[i], ref.v[i]);
}

TEST(MedianFilterTest, RejectsEvenWindow) {
  const Tensor x(Shape{1, 1, 4, 4});
  EXPECT_THROW(median_filter(x, window(2)), std::invalid_argument);
  EXPECT_THROW(median_filter(x, window(0)), std::invalid_argument);
  U8Plane p{4, 4, std::vector<std::uint8_t>(16)};
  EXPECT_THROW(median_filter_hist_u8(p, window(4)), std::invalid_argument);
}

TEST(MedianFilterTest, WindowOneIsIdentity) {
  RngStream rng(20, 0);
  const Tensor x = rng_normal(rng, Shape{2, 2, 5, 6}, 0.0f, 1.0f);
  const MedianResult r = median_filter(x, window(1));
  EXPECT_EQ(r.values, x);
  const Tensor g = rng_normal(rng, x.shape(), 0.0f, 1.0f);
  EXPECT_EQ(median_backward(g, r.argmap), g);
}

TEST(MedianFilterTest, MatchesSortOracleWithTies) {
  RngStream rng(21, 0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t w = 1 + 2 * rng.below(4);
    const Shape s{1 + rng.below(2), 1 + rng.below(2), 1 + rng.below(12),
                  1 + rng.below(12)};
    const Tensor x = random_ints(rng, s, 5);
    const Tensor y = median_filter(x, window(w)).values;
    const oracle::Grid ref = oracle::median(oracle::Grid(x), w);
    for (std::size_t i = 0; i < ref.v.size(); ++i) {
      ASSERT_EQ(y.data()[i], ref.v[i]) << "trial " << t;
    }
  }
}

TEST(MedianFilterTest, ArgmedianInvariant) {
  RngStream rng(22, 0);
  for (std::size_t w : {3u, 5u, 7u}) {
    const Tensor x = random_ints(rng, Shape{2, 2, 9, 8}, 4);
    const MedianResult r = median_filter(x, window(w));
    const auto radius = static_cast<int>(w / 2);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      ASSERT_LE(std::abs(r.argmap.dy[i]), radius);
      ASSERT_LE(std::abs(r.argmap.dx[i]), radius);
      ASSERT_EQ(x.data()[r.argmap.source_index(i)], r.values.data()[i]);
    }
  }
}

TEST(MedianFilterTest, TiesResolveToFirstInScan) {
  const Tensor x(Shape{1, 1, 4, 4}, 3.0f);
  const MedianResult r = median_filter(x, window(3));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_EQ(r.argmap.dy[i], -1);
    EXPECT_EQ(r.argmap.dx[i], -1);
  }
}

TEST(MedianFilterTest, IsMonotone) {
  RngStream rng(23, 0);
  for (int t = 0; t < 100; ++t) {
    const Tensor x = rng_uniform(rng, Shape{1, 1, 10, 10}, 0.0f, 100.0f);
    const Tensor bump = rng_uniform(rng, x.shape(), 0.0f, 20.0f);
    const Tensor y = axpby(1.0f, x, 1.0f, bump);
    const std::size_t w = 1 + 2 * rng.below(3);
    const Tensor fx = median_filter(x, window(w)).values;
    const Tensor fy = median_filter(y, window(w)).values;
    for (std::size_t i = 0; i < fx.numel(); ++i) {
      ASSERT_LE(fx.data()[i], fy.data()[i]);
    }
  }
}

TEST(MedianFilterTest, RemovesSaltAndPepper) {
  RngStream rng(26, 0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t h = 32, w = 32;
    const double fy = rng.uniform(0.05, 0.3), fx = rng.uniform(0.05, 0.3);
    const double ph = rng.uniform(0.0, 6.28);
    Tensor clean(Shape{1, 1, h, w});
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        clean.at(0, 0, y, x) =
            float(128.0 + 60.0 * std::sin(fy * y + ph) * std::cos(fx * x));
    Tensor noisy = clean;
    for (float& v : noisy.data())
      if (rng.uniform() < 0.1) v = rng.below(2) ? 255.0f : 0.0f;
    const Tensor den = median_filter(noisy, window(3)).values;
    double e_den = 0.0, e_noisy = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) {
      e_den += std::pow(den.data()[i] - clean.data()[i], 2);
      e_noisy += std::pow(noisy.data()[i] - clean.data()[i], 2);
    }
    EXPECT_LT(e_den, e_noisy) << "trial " << t;
  }
}

TEST(MedianHistTest, MatchesSortPath) {
  RngStream rng(24, 0);
  const std::size_t windows[] = {3, 5, 7, 15};
  for (int t = 0; t < 1000; ++t) {
    const std::size_t w = windows[t % 4];
    const U8Plane p = random_u8(rng, 1 + rng.below(32), 1 + rng.below(32));
    const U8Plane fast = median_filter_hist_u8(p, window(w));
    const Tensor slow = median_filter(from_u8_plane(p), window(w)).values;
    ASSERT_EQ(fast, to_u8_plane(slow.data(), p.h, p.w)) << "trial " << t;
  }
}

TEST(MedianHistTest, WindowOneIsIdentity) {
  RngStream rng(25, 0);
  const U8Plane p = random_u8(rng, 9, 13);
  EXPECT_EQ(median_filter_hist_u8(p, window(1)), p);
}

TEST(MedianHistTest, ConstantPlane) {
  const U8Plane p{7, 9, std::vector<std::uint8_t>(63, 201)};
  EXPECT_EQ(median_filter_hist_u8(p, window(5)), p);
}

TEST(MedianHistTest, ExtremeValues) {
  RngStream rng(25, 0);
  U8Plane p{16, 16, std::vector<std::uint8_t>(256)};
  for (auto& v : p.data) v = rng.below(2) ? 255 : 0;
  for (std::size_t w : {3u, 5u, 15u}) {
    const Tensor slow = median_filter(from_u8_plane(p), window(w)).values;
    EXPECT_EQ(median_filter_hist_u8(p, window(w)),
              to_u8_plane(slow.data(), 16, 16));
  }
}

TEST(MedianBackwardTest, RoutesToArgmedianCounts) {
  // Strictly increasing plane: every window value is distinct except for
  // replicated border copies, which share a source pixel.
  const std::size_t h = 6, w = 7;
  Tensor x(Shape{1, 1, h, w});
  for (std::size_t i = 0; i < x.numel(); ++i) x.data()[i] = float(i);
  const MedianResult r = median_filter(x, window(3));
  const Tensor g = median_backward(Tensor(x.shape(), 1.0f), r.argmap);

  std::map<std::pair<long, long>, int> counts;
  for (long y = 0; y < long(h); ++y) {
    for (long xx = 0; xx < long(w); ++xx) {
      std::vector<std::pair<float, std::pair<long, long>>> win;
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long sy = std::clamp(y + dy, 0L, long(h) - 1);
          const long sx = std::clamp(xx + dx, 0L, long(w) - 1);
          win.push_back({x.at(0, 0, sy, sx), {sy, sx}});
        }
      std::sort(win.begin(), win.end());
      ++counts[win[4].second];
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      const auto it = counts.find({long(y), long(xx)});
      const int expected = it == counts.end() ? 0 : it->second;
      EXPECT_EQ(g.at(0, 0, y, xx), float(expected)) << y << "," << xx;
    }
  }
}

TEST(MedianBackwardTest, FiniteDifferences) {
  RngStream rng(26, 0);
  for (int seed = 0; seed < 10; ++seed) {
    const std::size_t w = seed % 2 ? 5 : 3;
    const Tensor x = oracle::tie_free(Shape{1, 2, 7, 6}, rng);
    const Tensor proj = rng_normal(rng, x.shape(), 0.0f, 1.0f);
    const oracle::Grid pg(proj);
    const MedianResult r = median_filter(x, window(w));
    const Tensor analytic = median_backward(proj, r.argmap);
    const auto numeric = oracle::central_diff(
        oracle::Grid(x),
        [&](const oracle::Grid& g) {
          return oracle::dot(oracle::median(g, w), pg);
        },
        1e-3);
    EXPECT_LT(oracle::max_rel_error(analytic.data(), numeric), 1e-3);
  }
}

TEST(MedianBackwardTest, ConservesGradientMass) {
  RngStream rng(27, 0);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = random_ints(rng, Shape{2, 3, 8, 8}, 6);
    const MedianResult r = median_filter(x, window(3 + 2 * (t % 2)));
    // Integer-valued gradients keep every partial sum exact in float.
    const Tensor g = random_ints(rng, x.shape(), 9);
    EXPECT_EQ(sum(median_backward(g, r.argmap)), sum(g));
  }
}

TEST(MedianBackwardTest, RejectsShapeMismatch) {
  const MedianResult r = median_filter(Tensor(Shape{1, 1, 4, 4}), window(3));
  EXPECT_THROW(median_backward(Tensor(Shape{1, 1, 4, 5}), r.argmap),
               ShapeError);
}

TEST(MrelbpTest, ConstantPlaneIsAllOnes) {
  const Tensor y = mrelbp_ci(Tensor(Shape{1, 1, 5, 5}, 9.0f), window(3));
  for (float v : y.data()) EXPECT_EQ(v, 1.0f);
}

TEST(MrelbpTest, StepEdge) {
  Tensor x(Shape{1, 1, 6, 8});
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t xx = 4; xx < 8; ++xx) x.at(0, 0, y, xx) = 100.0f;
  const Tensor b = mrelbp_ci(x, window(3));
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t xx = 0; xx < 8; ++xx)
      EXPECT_EQ(b.at(0, 0, y, xx), xx < 4 ? 0.0f : 1.0f) << y << "," << xx;
}

TEST(MrelbpTest, MatchesTwoPassOracle) {
  RngStream rng(28, 0);
  for (int t = 0; t < 20; ++t) {
    const Tensor x = rng_uniform(rng, Shape{1, 2, 11, 9}, 0.0f, 255.0f);
    const Tensor b = mrelbp_ci(x, window(3));
    const oracle::Grid med = oracle::median(oracle::Grid(x), 3);
    const auto mu = oracle::plane_means(med);
    for (std::size_t i = 0; i < med.v.size(); ++i) {
      const float expected = med.v[i] - mu[i / 99] >= 0.0 ? 1.0f : 0.0f;
      ASSERT_EQ(b.data()[i], expected);
    }
  }
}

}  // namespace
}  // namespace medinet
