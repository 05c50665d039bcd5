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

#include "medinet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace medinet {

namespace {

// Direct double-precision forward: replicate-border sort median, plane mean,
// zero-padded correlation.
struct Ref {
  std::size_t n, c, h, w;
  std::size_t co, k, window, stride;
  bool median;

  std::size_t out_h() const { return (h + 2 * (k / 2) - k) / stride + 1; }
  std::size_t out_w() const { return (w + 2 * (k / 2) - k) / stride + 1; }

  std::vector<double> forward(const std::vector<double>& x,
                              const std::vector<double>& wt) const {
    std::vector<double> in = x;
    if (median) {
      const std::ptrdiff_t r = std::ptrdiff_t(window / 2);
      std::vector<double> win;
      for (std::size_t p = 0; p < n * c; ++p) {
        const double* src = x.data() + p * h * w;
        double* dst = in.data() + p * h * w;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx) {
            win.clear();
            for (std::ptrdiff_t dy = -r; dy <= r; ++dy)
              for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                const auto sy = std::clamp<std::ptrdiff_t>(
                    std::ptrdiff_t(y) + dy, 0, std::ptrdiff_t(h) - 1);
                const auto sx = std::clamp<std::ptrdiff_t>(
                    std::ptrdiff_t(xx) + dx, 0, std::ptrdiff_t(w) - 1);
                win.push_back(src[sy * std::ptrdiff_t(w) + sx]);
              }
            std::sort(win.begin(), win.end());
            dst[y * w + xx] = win[win.size() / 2];
          }
        double mean = 0.0;
        for (std::size_t i = 0; i < h * w; ++i) mean += dst[i];
        mean /= double(h * w);
        for (std::size_t i = 0; i < h * w; ++i) dst[i] -= mean;
      }
    }
    const std::size_t ho = out_h(), wo = out_w();
    const std::ptrdiff_t pad = std::ptrdiff_t(k / 2);
    std::vector<double> out(n * co * ho * wo, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t o = 0; o < co; ++o)
        for (std::size_t u = 0; u < ho; ++u)
          for (std::size_t v = 0; v < wo; ++v) {
            double acc = 0.0;
            for (std::size_t i = 0; i < c; ++i)
              for (std::size_t p = 0; p < k; ++p)
                for (std::size_t q = 0; q < k; ++q) {
                  const std::ptrdiff_t y = std::ptrdiff_t(u * stride + p) - pad;
                  const std::ptrdiff_t xx = std::ptrdiff_t(v * stride + q) - pad;
                  if (y < 0 || xx < 0 || y >= std::ptrdiff_t(h) ||
                      xx >= std::ptrdiff_t(w))
                    continue;
                  acc += in[((s * c + i) * h + std::size_t(y)) * w + std::size_t(xx)] *
                         wt[((o * c + i) * k + p) * k + q];
                }
            out[((s * co + o) * ho + u) * wo + v] = acc;
          }
    return out;
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_rel(std::span<const float> analytic, const std::vector<double>& num) {
  double worst = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    const double a = analytic[i];
    const double d = std::fabs(a - num[i]) /
                     std::max({std::fabs(a), std::fabs(num[i]), 1e-3});
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

GradcheckReport gradcheck_layer(const GradcheckOptions& opts) {
  GradcheckReport rep;
  const Shape xs{2, 2, 6, 7};
  const std::size_t co = 3, k = 3;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    RngStream rng(opts.seed, hash_combine(0x67726164ULL, t));
    std::vector<float> ladder(xs.numel());
    for (std::size_t i = 0; i < ladder.size(); ++i) ladder[i] = 0.01f * float(i);
    for (std::size_t i = ladder.size(); i > 1; --i) {
      std::swap(ladder[i - 1], ladder[rng.below(i)]);
    }
    const Tensor x(xs, ladder);
    const Tensor w = rng_uniform(rng, Shape{co, xs.c, k, k}, -1.0f, 1.0f);
    ConvLayerOptions lo;
    lo.kind = opts.kind;
    lo.stride = opts.stride;
    lo.median.window = opts.window;
    lo.mu_stop_gradient = opts.mu_stop_gradient;
    ConvLayer layer(w, lo);
    const Tensor y = layer.forward(x);
    const Tensor proj =
        t % 2 ? rng_normal(rng, y.shape(), 0.0f, 1.0f) : Tensor(y.shape(), 1.0f);
    const LayerGradients g = layer.backward(proj);

    const Ref ref{xs.n, xs.c, xs.h, xs.w, co, k,
                  opts.window, opts.stride, opts.kind == ConvKind::kMedian};
    const std::vector<double> xd(x.data().begin(), x.data().end());
    const std::vector<double> wd(w.data().begin(), w.data().end());
    const std::vector<double> pd(proj.data().begin(), proj.data().end());
    auto central = [&](std::vector<double> v, bool wrt_weights) {
      std::vector<double> out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + opts.step;
        const double up = dot(wrt_weights ? ref.forward(xd, v) : ref.forward(v, wd), pd);
        v[i] = orig - opts.step;
        const double dn = dot(wrt_weights ? ref.forward(xd, v) : ref.forward(v, wd), pd);
        v[i] = orig;
        out[i] = (up - dn) / (2.0 * opts.step);
      }
      return out;
    };
    rep.max_rel_error_weights = std::max(
        rep.max_rel_error_weights, max_rel(g.d_weights.data(), central(wd, true)));
    rep.max_rel_error_input = std::max(
        rep.max_rel_error_input, max_rel(g.d_input.data(), central(xd, false)));
    ++rep.trials;
  }
  return rep;
}

}  // namespace medinet
