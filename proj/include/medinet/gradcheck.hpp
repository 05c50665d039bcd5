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

#ifndef MEDINET_GRADCHECK_HPP_
#define MEDINET_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>

#include "medinet/mediconv.hpp"

namespace medinet {

struct GradcheckOptions {
  ConvKind kind = ConvKind::kMedian;
  std::size_t window = 3;
  std::size_t stride = 1;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double step = 1e-3;
  // Forwarded to the layer. The reference always differentiates through the
  // mean, so setting this should make the input error large.
  bool mu_stop_gradient = false;
};

struct GradcheckReport {
  double max_rel_error_weights = 0.0;
  double max_rel_error_input = 0.0;
  std::size_t trials = 0;

  double max_rel_error() const {
    return max_rel_error_weights > max_rel_error_input ? max_rel_error_weights
                                                       : max_rel_error_input;
  }
};

// Compares ConvLayer::backward against central differences of a separate
// double-precision forward on random (2, 2, 6, 7) inputs whose values are a
// shuffled ladder spaced 0.01 apart, so no probe can reorder a median window.
// Loss alternates between sum(out) and a random projection <out, r>.
// Relative error: |a - n| / max(|a|, |n|, 1e-3).
GradcheckReport gradcheck_layer(const GradcheckOptions& opts);

}  // namespace medinet

#endif  // MEDINET_GRADCHECK_HPP_
