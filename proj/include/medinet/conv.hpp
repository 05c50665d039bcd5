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

#ifndef MEDINET_CONV_HPP_
#define MEDINET_CONV_HPP_

#include <cstddef>

#include "medinet/tensor.hpp"

namespace medinet {

struct ConvParams {
  std::size_t padding = 0;
  std::size_t stride = 1;
};

// Output spatial extent: floor((in + 2 * padding - k) / stride) + 1.
std::size_t conv_out_extent(std::size_t in, std::size_t k, ConvParams p);

// Validates a (c_out, c_in, k, k) weight tensor against an input channel
// count. Throws ShapeError.
void check_conv_weights(const Tensor& w, std::size_t c_in);

// Zero-padded cross-correlation:
//   out(n, o, u, v) = sum_i sum_{p,q} x(n, i, u*s + p - pad, v*s + q - pad)
//                                    * w(o, i, p, q)
// Accumulation is done in double via im2col + GEMM.
Tensor conv2d(const Tensor& x, const Tensor& w, ConvParams p);

struct ConvGrads {
  Tensor d_input;
  Tensor d_weights;
};

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w,
                          const Tensor& grad_out, ConvParams p);

}  // namespace medinet

#endif  // MEDINET_CONV_HPP_
