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

#include "medinet/net.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace medinet {

namespace {

constexpr float kPixelScale = 1.0f / 255.0f;

std::string activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "prelu";
}

std::string pooling_name(Pooling p) {
  return p == Pooling::kGlobalAverage ? "global_average" : "none";
}

}  // namespace

NetworkSpec NetworkSpec::toy(std::size_t medi_layers, std::size_t in_channels) {
  NetworkSpec s;
  s.in_channels = in_channels;
  s.convs = {{16, 3, 1}, {32, 3, 2}, {32, 3, 1},
             {64, 3, 2}, {64, 3, 1}, {128, 3, 2}};
  s.medi_layers = medi_layers;
  return s;
}

void NetworkSpec::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("network spec: " + m);
  };
  if (in_channels == 0 || height == 0 || width == 0) fail("empty input shape");
  if (convs.empty()) fail("needs at least one conv block");
  for (const auto& c : convs) {
    if (c.channels == 0) fail("conv block with zero channels");
    if (c.kernel % 2 == 0) fail("conv kernels must be odd");
    if (c.stride == 0) fail("conv stride must be >= 1");
  }
  if (medi_layers > convs.size()) {
    fail("medi_layers " + std::to_string(medi_layers) + " exceeds " +
         std::to_string(convs.size()) + " conv blocks");
  }
  if (median_window % 2 == 0) fail("median window must be odd");
  if (num_classes < 2) fail("needs at least two classes");
}

std::vector<Shape> NetworkSpec::block_shapes() const {
  std::vector<Shape> out;
  std::size_t h = height, w = width;
  for (const auto& c : convs) {
    const ConvParams p{(c.kernel - 1) / 2, c.stride};
    h = conv_out_extent(h, c.kernel, p);
    w = conv_out_extent(w, c.kernel, p);
    out.push_back(Shape{1, c.channels, h, w});
  }
  return out;
}

std::size_t NetworkSpec::feature_size() const {
  const Shape last = block_shapes().back();
  return pooling == Pooling::kGlobalAverage ? last.c : last.c * last.h * last.w;
}

nlohmann::json to_json(const NetworkSpec& s) {
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& c : s.convs) {
    convs.push_back(
        {{"channels", c.channels}, {"kernel", c.kernel}, {"stride", c.stride}});
  }
  return {{"input", {s.in_channels, s.height, s.width}},
          {"convs", convs},
          {"activation", activation_name(s.activation)},
          {"pooling", pooling_name(s.pooling)},
          {"num_classes", s.num_classes},
          {"medi_layers", s.medi_layers},
          {"median_window", s.median_window},
          {"mu_stop_gradient", s.mu_stop_gradient}};
}

NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec s;
  try {
    if (j.contains("input")) {
      const auto in = j.at("input").get<std::vector<std::size_t>>();
      if (in.size() != 3) throw std::invalid_argument("input must be [c, h, w]");
      s.in_channels = in[0];
      s.height = in[1];
      s.width = in[2];
    }
    if (j.contains("convs")) {
      for (const auto& c : j.at("convs")) {
        s.convs.push_back({c.at("channels").get<std::size_t>(),
                           c.value("kernel", std::size_t{3}),
                           c.value("stride", std::size_t{1})});
      }
    } else {
      s.convs = NetworkSpec::toy().convs;
    }
    const std::string act = j.value("activation", "prelu");
    if (act == "relu") {
      s.activation = Activation::kRelu;
    } else if (act != "prelu") {
      throw std::invalid_argument("unknown activation '" + act + "'");
    }
    const std::string pool = j.value("pooling", "none");
    if (pool == "global_average") {
      s.pooling = Pooling::kGlobalAverage;
    } else if (pool != "none") {
      throw std::invalid_argument("unknown pooling '" + pool + "'");
    }
    s.num_classes = j.value("num_classes", std::size_t{10});
    s.medi_layers = j.value("medi_layers", std::size_t{0});
    s.median_window = j.value("median_window", std::size_t{3});
    s.mu_stop_gradient = j.value("mu_stop_gradient", false);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("network spec: ") + e.what());
  }
  s.validate();
  return s;
}

Model::Model(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t c_in = spec_.in_channels;
  for (std::size_t i = 0; i < spec_.convs.size(); ++i) {
    const auto& b = spec_.convs[i];
    RngStream rng(seed, 1000 + i);
    ConvLayerOptions o;
    o.kind = i < spec_.medi_layers ? ConvKind::kMedian : ConvKind::kStandard;
    o.stride = b.stride;
    o.median.window = spec_.median_window;
    o.mu_stop_gradient = spec_.mu_stop_gradient;
    convs_.emplace_back(kaiming_uniform(b.channels, c_in, b.kernel, rng), o);
    if (spec_.activation == Activation::kPrelu) {
      slopes_.emplace_back(Shape{1, b.channels, 1, 1}, 0.25f);
    }
    c_in = b.channels;
  }
  const std::size_t f = spec_.feature_size();
  RngStream rng(seed, 2000);
  const float bound = float(1.0 / std::sqrt(double(f)));
  linear_w_ = rng_uniform(rng, Shape{spec_.num_classes, f, 1, 1}, -bound, bound);
  linear_b_ = Tensor(Shape{1, spec_.num_classes, 1, 1}, 0.0f);
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    out.push_back(&convs_[i].weights());
    if (!slopes_.empty()) out.push_back(&slopes_[i]);
  }
  out.push_back(&linear_w_);
  out.push_back(&linear_b_);
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    out.push_back("conv" + std::to_string(i) + ".weight");
    if (!slopes_.empty()) out.push_back("conv" + std::to_string(i) + ".prelu");
  }
  out.push_back("linear.weight");
  out.push_back("linear.bias");
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->numel();
  return n;
}

std::string Model::describe() const {
  std::ostringstream os;
  const auto shapes = spec_.block_shapes();
  os << "input (" << spec_.in_channels << "," << spec_.height << ","
     << spec_.width << ")\n";
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const auto& l = convs_[i];
    os << "block " << i << ": " << to_string(l.kind()) << " "
       << l.in_channels() << "->" << l.out_channels() << " k" << l.kernel()
       << " s" << l.options().stride;
    if (l.kind() == ConvKind::kMedian) os << " w" << l.options().median.window;
    os << " " << activation_name(spec_.activation) << " -> ("
       << shapes[i].c << "," << shapes[i].h << "," << shapes[i].w << ")\n";
  }
  os << "pool " << pooling_name(spec_.pooling) << "\n";
  os << "linear " << spec_.feature_size() << "->" << spec_.num_classes << "\n";
  return os.str();
}

Tensor Model::run(const Tensor& x, ForwardTrace& trace, bool cache) {
  if (x.c() != spec_.in_channels || x.h() != spec_.height ||
      x.w() != spec_.width) {
    throw ShapeError("model expects (N," + std::to_string(spec_.in_channels) +
                     "," + std::to_string(spec_.height) + "," +
                     std::to_string(spec_.width) + ") input, got " +
                     x.shape().str());
  }
  Tensor h(x.shape());
  {
    auto src = x.data();
    auto dst = h.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * kPixelScale;
  }
  const std::size_t n = x.n();
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    Tensor pre = cache ? convs_[i].forward(h) : convs_[i].infer(h);
    Tensor post(pre.shape());
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < pre.c(); ++c) {
        const float a = slopes_.empty() ? 0.0f : slopes_[i].data()[c];
        auto src = pre.plane(s, c);
        auto dst = post.plane(s, c);
        for (std::size_t k = 0; k < src.size(); ++k) {
          dst[k] = src[k] > 0.0f ? src[k] : a * src[k];
        }
      }
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(post);
    h = std::move(post);
  }
  const std::size_t f = spec_.feature_size();
  Tensor feat(Shape{n, f, 1, 1});
  if (spec_.pooling == Pooling::kGlobalAverage) {
    const ChannelScalars m = channel_mean(h);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      feat.data()[i] = float(m.values[i]);
    }
  } else {
    std::copy(h.data().begin(), h.data().end(), feat.data().begin());
  }
  Tensor logits(Shape{n, spec_.num_classes, 1, 1});
  for (std::size_t s = 0; s < n; ++s) {
    const float* fs = feat.data().data() + s * f;
    for (std::size_t k = 0; k < spec_.num_classes; ++k) {
      const float* wk = linear_w_.data().data() + k * f;
      double acc = linear_b_.data()[k];
      for (std::size_t j = 0; j < f; ++j) acc += double(wk[j]) * fs[j];
      logits.data()[s * spec_.num_classes + k] = float(acc);
    }
  }
  trace.features = std::move(feat);
  return logits;
}

Tensor Model::forward(const Tensor& x) {
  ForwardTrace t;
  Tensor out = run(x, t, true);
  trace_ = std::move(t);
  return out;
}

Tensor Model::predict(const Tensor& x, ForwardTrace* trace) const {
  ForwardTrace local;
  return const_cast<Model*>(this)->run(x, trace ? *trace : local, false);
}

std::vector<Tensor> Model::backward(const Tensor& d_logits) {
  if (!trace_) throw std::logic_error("model backward called without forward");
  const ForwardTrace& t = *trace_;
  const std::size_t n = t.features.n();
  const std::size_t f = spec_.feature_size();
  const std::size_t k = spec_.num_classes;
  if (d_logits.shape() != Shape{n, k, 1, 1}) {
    throw ShapeError("logit gradient shape " + d_logits.shape().str());
  }

  Tensor d_w(linear_w_.shape(), 0.0f);
  Tensor d_b(linear_b_.shape(), 0.0f);
  Tensor d_feat(t.features.shape(), 0.0f);
  {
    const float* g = d_logits.data().data();
    const float* fe = t.features.data().data();
    const float* w = linear_w_.data().data();
    std::vector<double> acc_w(k * f, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < k; ++c) {
        const double gc = g[s * k + c];
        d_b.data()[c] += float(gc);
        for (std::size_t j = 0; j < f; ++j) acc_w[c * f + j] += gc * fe[s * f + j];
      }
    for (std::size_t i = 0; i < k * f; ++i) d_w.data()[i] = float(acc_w[i]);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t j = 0; j < f; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) acc += double(g[s * k + c]) * w[c * f + j];
        d_feat.data()[s * f + j] = float(acc);
      }
  }

  const Tensor& last = t.post.back();
  Tensor d_h(last.shape());
  if (spec_.pooling == Pooling::kGlobalAverage) {
    const float inv = 1.0f / float(last.h() * last.w());
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < last.c(); ++c) {
        const float g = d_feat.data()[s * last.c() + c] * inv;
        for (float& v : d_h.plane(s, c)) v = g;
      }
  } else {
    std::copy(d_feat.data().begin(), d_feat.data().end(), d_h.data().begin());
  }

  std::vector<Tensor> conv_grads(convs_.size());
  std::vector<Tensor> slope_grads(slopes_.size());
  for (std::size_t i = convs_.size(); i-- > 0;) {
    const Tensor& pre = t.pre[i];
    Tensor d_pre(pre.shape());
    std::vector<double> d_slope(pre.c(), 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t c = 0; c < pre.c(); ++c) {
        const float a = slopes_.empty() ? 0.0f : slopes_[i].data()[c];
        auto p = pre.plane(s, c);
        auto g = d_h.plane(s, c);
        auto d = d_pre.plane(s, c);
        for (std::size_t q = 0; q < p.size(); ++q) {
          if (p[q] > 0.0f) {
            d[q] = g[q];
          } else {
            d[q] = a * g[q];
            d_slope[c] += double(g[q]) * p[q];
          }
        }
      }
    if (!slopes_.empty()) {
      slope_grads[i] = Tensor(slopes_[i].shape());
      for (std::size_t c = 0; c < pre.c(); ++c) {
        slope_grads[i].data()[c] = float(d_slope[c]);
      }
    }
    LayerGradients lg = convs_[i].backward(d_pre);
    conv_grads[i] = std::move(lg.d_weights);
    d_h = std::move(lg.d_input);
  }

  std::vector<Tensor> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    out.push_back(std::move(conv_grads[i]));
    if (!slopes_.empty()) out.push_back(std::move(slope_grads[i]));
  }
  out.push_back(std::move(d_w));
  out.push_back(std::move(d_b));
  return out;
}

LossResult softmax_cross_entropy(const Tensor& logits,
                                 const std::vector<int>& labels) {
  const std::size_t n = logits.n(), k = logits.c();
  if (labels.size() != n || logits.h() != 1 || logits.w() != 1) {
    throw ShapeError("cross entropy: logits " + logits.shape().str() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  LossResult r;
  r.d_logits = Tensor(logits.shape());
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const float* z = logits.data().data() + s * k;
    const int y = labels[s];
    if (y < 0 || std::size_t(y) >= k) {
      throw std::invalid_argument("label out of range: " + std::to_string(y));
    }
    const double zmax = *std::max_element(z, z + k);
    double denom = 0.0;
    for (std::size_t c = 0; c < k; ++c) denom += std::exp(double(z[c]) - zmax);
    const double log_denom = std::log(denom) + zmax;
    total += log_denom - z[y];
    std::size_t best = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double p = std::exp(double(z[c]) - log_denom);
      r.d_logits.data()[s * k + c] =
          float((p - (int(c) == y ? 1.0 : 0.0)) / double(n));
      if (z[c] > z[best]) best = c;
    }
    r.correct += best == std::size_t(y);
  }
  r.loss = total / double(n);
  return r;
}

std::vector<int> argmax_classes(const Tensor& logits) {
  std::vector<int> out(logits.n());
  const std::size_t k = logits.c();
  for (std::size_t s = 0; s < logits.n(); ++s) {
    const float* z = logits.data().data() + s * k;
    out[s] = int(std::max_element(z, z + k) - z);
  }
  return out;
}

}  // namespace medinet
