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

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace medinet {

std::string to_string(ConvKind kind) {
  return kind == ConvKind::kMedian ? "mediconv" : "conv";
}

ConvKind conv_kind_from_string(const std::string& s) {
  if (s == "conv" || s == "std") return ConvKind::kStandard;
  if (s == "mediconv" || s == "medi") return ConvKind::kMedian;
  throw std::invalid_argument("unknown conv layer type '" + s + "'");
}

MedianDifference median_difference(const Tensor& x, const MedianConfig& cfg) {
  MedianResult med = median_filter(x, cfg);
  ChannelScalars mu = channel_mean(med.values);
  Tensor centered = subtract_channel(med.values, mu);
  return MedianDifference{std::move(med), std::move(mu), std::move(centered)};
}

ConvLayer::ConvLayer(Tensor weights, ConvLayerOptions options)
    : weights_(std::move(weights)), options_(options) {
  check_conv_weights(weights_, weights_.c());
  if (options_.stride == 0) {
    throw std::invalid_argument("conv layer stride must be >= 1");
  }
  if (options_.kind == ConvKind::kMedian) options_.median.validate();
}

Tensor ConvLayer::forward(const Tensor& x) {
  if (x.c() != in_channels()) {
    throw ShapeError("conv layer expects " + std::to_string(in_channels()) +
                     " channels, input is " + x.shape().str());
  }
  if (options_.kind == ConvKind::kStandard) {
    median_cache_.reset();
    input_cache_ = x;
    return conv2d(x, weights_, conv_params());
  }
  median_cache_ = median_difference(x, options_.median);
  input_cache_.reset();
  return conv2d(median_cache_->centered, weights_, conv_params());
}

Tensor ConvLayer::infer(const Tensor& x) const {
  if (x.c() != in_channels()) {
    throw ShapeError("conv layer expects " + std::to_string(in_channels()) +
                     " channels, input is " + x.shape().str());
  }
  if (options_.kind == ConvKind::kStandard) {
    return conv2d(x, weights_, conv_params());
  }
  return conv2d(median_difference(x, options_.median).centered, weights_,
                conv_params());
}

const Tensor* ConvLayer::conv_input() const {
  if (median_cache_) return &median_cache_->centered;
  if (input_cache_) return &*input_cache_;
  return nullptr;
}

void ConvLayer::clear_cache() {
  input_cache_.reset();
  median_cache_.reset();
}

LayerGradients ConvLayer::backward(const Tensor& grad_out) const {
  const Tensor* x = conv_input();
  if (x == nullptr) {
    throw std::logic_error("conv layer backward called without forward");
  }
  ConvGrads g = conv2d_backward(*x, weights_, grad_out, conv_params());
  if (options_.kind == ConvKind::kStandard) {
    return LayerGradients{std::move(g.d_weights), std::move(g.d_input)};
  }
  Tensor d_median = std::move(g.d_input);
  if (!options_.mu_stop_gradient) {
    // d/dm of (m - mean(m)) is the projector I - 11^T / |plane|.
    d_median = subtract_channel(d_median, channel_mean(d_median));
  }
  Tensor d_input = median_backward(d_median, median_cache_->median.argmap);
  return LayerGradients{std::move(g.d_weights), std::move(d_input)};
}

Tensor kaiming_uniform(std::size_t c_out, std::size_t c_in, std::size_t k,
                       RngStream& rng) {
  const double bound = std::sqrt(6.0 / double(c_in * k * k));
  return rng_uniform(rng, Shape{c_out, c_in, k, k}, float(-bound),
                     float(bound));
}

void save_layer(const std::filesystem::path& stem, const ConvLayer& layer) {
  const auto& o = layer.options();
  nlohmann::json j = {
      {"type", to_string(layer.kind())},
      {"k", layer.kernel()},
      {"window", o.median.window},
      {"padding", layer.conv_params().padding},
      {"stride", o.stride},
      {"mu_stop_gradient", o.mu_stop_gradient},
      {"c_in", layer.in_channels()},
      {"c_out", layer.out_channels()},
  };
  auto bin = stem;
  bin += ".bin";
  auto side = stem;
  side += ".json";
  save_tensor(bin, layer.weights());
  std::ofstream out(side);
  if (!out) throw IoError("cannot write " + side.string());
  out << j.dump(2) << '\n';
}

ConvLayer load_layer(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto side = stem;
  side += ".json";
  std::ifstream in(side);
  if (!in) throw IoError("cannot open " + side.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  ConvLayerOptions o;
  o.kind = conv_kind_from_string(j.at("type").get<std::string>());
  o.stride = j.at("stride").get<std::size_t>();
  o.median.window = j.at("window").get<std::size_t>();
  o.mu_stop_gradient = j.value("mu_stop_gradient", false);
  Tensor w = load_tensor(bin);
  if (w.h() != j.at("k").get<std::size_t>() ||
      j.at("padding").get<std::size_t>() != (w.h() - 1) / 2) {
    throw ShapeError("layer sidecar disagrees with weight tensor " +
                     w.shape().str());
  }
  return ConvLayer(std::move(w), o);
}

}  // namespace medinet
