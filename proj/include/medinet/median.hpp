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

#ifndef MEDINET_MEDIAN_HPP_
#define MEDINET_MEDIAN_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "medinet/tensor.hpp"

namespace medinet {

enum class BorderMode { kReplicate };
enum class TieBreak { kFirstInRowMajorScan };

struct MedianConfig {
  std::size_t window = 3;
  BorderMode border = BorderMode::kReplicate;
  TieBreak tie_break = TieBreak::kFirstInRowMajorScan;

  std::size_t radius() const { return window / 2; }
  // Throws std::invalid_argument unless window is odd and >= 1.
  void validate() const;
};

// For every filtered pixel, the window offset whose (border-clamped) source
// pixel was picked as the median. |dy|, |dx| <= radius.
struct ArgMedianMap {
  Shape shape;
  std::size_t window = 1;
  std::vector<std::int16_t> dy;
  std::vector<std::int16_t> dx;

  // Flat index into a tensor of `shape` of the source pixel for entry i.
  std::size_t source_index(std::size_t i) const;
};

struct MedianResult {
  Tensor values;
  ArgMedianMap argmap;
};

// Exact per-plane median over window x window neighborhoods with replicate
// borders. Selection-based; works on arbitrary reals and records argmedians.
MedianResult median_filter(const Tensor& x, const MedianConfig& cfg);

// Routes each output gradient to its argmedian source pixel (scatter-add).
Tensor median_backward(const Tensor& grad_out, const ArgMedianMap& argmap);

struct U8Plane {
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const U8Plane&) const = default;
};

// Constant-time (in window size) sliding median over running 256-bin column
// histograms with a 16-bin coarse level. Same results as median_filter on
// the same data. Window must be odd and at most 255.
U8Plane median_filter_hist_u8(const U8Plane& x, const MedianConfig& cfg);

// Rounds and clamps a plane to [0, 255].
U8Plane to_u8_plane(std::span<const float> plane, std::size_t h,
                    std::size_t w);
Tensor from_u8_plane(const U8Plane& p);

// Median-robust LBP, center-intensity variant: 1 where the local median is
// at least the plane-wide mean of the median map, else 0. Per (n, c) plane.
Tensor mrelbp_ci(const Tensor& x, const MedianConfig& cfg);

}  // namespace medinet

#endif  // MEDINET_MEDIAN_HPP_
