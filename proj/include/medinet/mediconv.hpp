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

#ifndef MEDINET_MEDICONV_HPP_
#define MEDINET_MEDICONV_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "medinet/conv.hpp"
#include "medinet/median.hpp"
#include "medinet/rng.hpp"
#include "medinet/tensor.hpp"

namespace medinet {

enum class ConvKind { kStandard, kMedian };

std::string to_string(ConvKind kind);
ConvKind conv_kind_from_string(const std::string& s);

struct LayerGradients {
  Tensor d_weights;
  Tensor d_input;
};

struct ConvLayerOptions {
  ConvKind kind = ConvKind::kStandard;
  std::size_t stride = 1;
  // Only used when kind == kMedian.
  MedianConfig median{};
  // Treat the per-channel mean as a constant during backward.
  bool mu_stop_gradient = false;
};

// Median pixel difference transform: median_filter(x) minus its own
// per-(sample, channel) mean.
struct MedianDifference {
  MedianResult median;
  ChannelScalars mu;
  Tensor centered;
};
MedianDifference median_difference(const Tensor& x, const MedianConfig& cfg);

// A same-padded k x k convolution, optionally preceded by the median
// difference transform (MeDiConv). Both kinds share the weight layout
// (c_out, c_in, k, k) and carry no bias.
//
// forward() caches what backward() needs; an instance is therefore
// single-writer across a forward/backward pair.
class ConvLayer {
 public:
  ConvLayer(Tensor weights, ConvLayerOptions options);

  const Tensor& weights() const { return weights_; }
  Tensor& weights() { return weights_; }
  const ConvLayerOptions& options() const { return options_; }
  ConvKind kind() const { return options_.kind; }
  std::size_t kernel() const { return weights_.h(); }
  std::size_t in_channels() const { return weights_.c(); }
  std::size_t out_channels() const { return weights_.n(); }
  ConvParams conv_params() const { return {(kernel() - 1) / 2, options_.stride}; }

  Tensor forward(const Tensor& x);
  // Same values as forward() without touching the cache; safe to call
  // concurrently.
  Tensor infer(const Tensor& x) const;
  // Throws std::logic_error without a preceding forward().
  LayerGradients backward(const Tensor& grad_out) const;

  // Input to the convolution stage of the last forward(): the raw input for
  // standard layers, the median difference map for MeDiConv.
  const Tensor* conv_input() const;
  const MedianDifference* median_cache() const {
    return median_cache_ ? &*median_cache_ : nullptr;
  }
  void clear_cache();

 private:
  Tensor weights_;
  ConvLayerOptions options_;
  std::optional<Tensor> input_cache_;
  std::optional<MedianDifference> median_cache_;
};

// Kaiming-uniform (fan-in) initialization: U(-b, b), b = sqrt(6 / fan_in).
Tensor kaiming_uniform(std::size_t c_out, std::size_t c_in, std::size_t k,
                       RngStream& rng);

// Weights go to `<stem>.bin` (tensor format) with a `<stem>.json` sidecar
// holding layer type, kernel, window, padding, stride and mu mode.
void save_layer(const std::filesystem::path& stem, const ConvLayer& layer);
ConvLayer load_layer(const std::filesystem::path& stem);

}  // namespace medinet

#endif  // MEDINET_MEDICONV_HPP_
