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

#include "medinet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "medinet/median.hpp"
#include "medinet/mediconv.hpp"
#include "medinet/net.hpp"
#include "medinet/rng.hpp"

namespace medinet {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
}

Timing summarize(std::vector<double> ns) {
  std::sort(ns.begin(), ns.end());
  return {ns.front(), ns[ns.size() / 2], ns.size()};
}

// Keeps results observable so the optimizer cannot drop the work.
volatile float g_sink = 0.0f;

template <typename T>
void keep(const T* p) {
  asm volatile("" : : "g"(p) : "memory");
}

}  // namespace

Timing time_call(const std::function<void()>& fn, std::size_t min_reps,
                 double min_seconds) {
  std::vector<double> ns;
  const auto start = Clock::now();
  fn();  // warm-up
  while (ns.size() < std::max<std::size_t>(min_reps, 1) ||
         elapsed_ns(start) < min_seconds * 1e9) {
    const auto t0 = Clock::now();
    fn();
    ns.push_back(elapsed_ns(t0));
  }
  return summarize(std::move(ns));
}

std::pair<Timing, Timing> time_pair(const std::function<void()>& a,
                                    const std::function<void()>& b,
                                    std::size_t min_reps, double min_seconds) {
  std::vector<double> na, nb;
  const auto start = Clock::now();
  a();
  b();
  while (na.size() < std::max<std::size_t>(min_reps, 1) ||
         elapsed_ns(start) < min_seconds * 1e9) {
    auto t0 = Clock::now();
    a();
    na.push_back(elapsed_ns(t0));
    t0 = Clock::now();
    b();
    nb.push_back(elapsed_ns(t0));
  }
  return {summarize(std::move(na)), summarize(std::move(nb))};
}

const BenchRow* BenchReport::find(const std::string& op, std::size_t size,
                                  std::size_t window) const {
  for (const auto& r : rows) {
    if (r.op == op && r.size == size && r.window == window) return &r;
  }
  return nullptr;
}

void BenchReport::write_csv(std::ostream& out) const {
  out << "op,size,window,ns_per_pixel,reps\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.4f", r.ns_per_pixel);
    out << r.op << ',' << r.size << ',' << r.window << ',' << buf << ','
        << r.reps << '\n';
  }
  for (const auto& [k, ratio] : forward_ratios) {
    std::snprintf(buf, sizeof(buf), "%.4f", ratio);
    out << "medi" << k << "_forward_ratio,32,3," << buf << ",0\n";
  }
}

BenchReport run_bench(const BenchOptions& opts) {
  BenchReport rep;
  for (std::size_t size : opts.sizes) {
    RngStream rng(opts.seed, hash_combine(0x62656e63ULL, size));
    U8Plane plane{size, size, std::vector<std::uint8_t>(size * size)};
    for (auto& v : plane.data) v = std::uint8_t(rng.below(256));
    const Tensor t = from_u8_plane(plane);
    const double px = double(size * size);

    for (std::size_t window : opts.windows) {
      MedianConfig mc;
      mc.window = window;
      const auto [sort_t, hist_t] = time_pair(
          [&] {
            const MedianResult m = median_filter(t, mc);
            keep(m.values.data().data());
          },
          [&] {
            const U8Plane m = median_filter_hist_u8(plane, mc);
            keep(m.data.data());
          },
          opts.min_reps, opts.min_seconds);
      const Timing copy_t = time_call(
          [&] {
            U8Plane c = plane;
            keep(c.data.data());
          },
          opts.min_reps, opts.min_seconds);
      rep.rows.push_back({"median_sort", size, window, sort_t.best_ns / px, sort_t.reps});
      rep.rows.push_back({"median_hist", size, window, hist_t.best_ns / px, hist_t.reps});
      rep.rows.push_back({"copy", size, window, copy_t.best_ns / px, copy_t.reps});
    }

    const std::size_t c = opts.layer_channels;
    const Tensor x = rng_uniform(rng, Shape{1, c, size, size}, 0.0f, 1.0f);
    const Tensor w = kaiming_uniform(c, c, 3, rng);
    for (ConvKind kind : {ConvKind::kStandard, ConvKind::kMedian}) {
      ConvLayerOptions lo;
      lo.kind = kind;
      ConvLayer layer(w, lo);
      const std::string stem = kind == ConvKind::kStandard ? "conv" : "medi";
      const std::size_t win = kind == ConvKind::kStandard ? 0 : 3;
      Tensor y;
      const Timing fwd = time_call(
          [&] {
            y = layer.forward(x);
            g_sink = y.data()[0];
          },
          opts.min_reps, opts.min_seconds);
      const Tensor g(y.shape(), 1.0f);
      const Timing bwd = time_call(
          [&] { g_sink = layer.backward(g).d_input.data()[0]; }, opts.min_reps,
          opts.min_seconds);
      rep.rows.push_back({stem + "_fwd", size, win, fwd.best_ns / px, fwd.reps});
      rep.rows.push_back({stem + "_bwd", size, win, bwd.best_ns / px, bwd.reps});
    }
  }
  for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{6}}) {
    rep.forward_ratios.emplace_back(
        k, model_forward_ratio(k, opts.model_batch, opts.min_reps,
                               opts.min_seconds, opts.seed));
  }
  return rep;
}

double model_forward_ratio(std::size_t medi_layers, std::size_t batch,
                           std::size_t min_reps, double min_seconds,
                           std::uint64_t seed) {
  const Model base(NetworkSpec::toy(0), seed);
  const Model medi(NetworkSpec::toy(medi_layers), seed);
  RngStream rng(seed, 0x666f7277ULL);
  const Tensor x = rng_uniform(rng, Shape{batch, 1, 32, 32}, 0.0f, 255.0f);
  const auto [tb, tm] = time_pair(
      [&] { g_sink = base.predict(x).data()[0]; },
      [&] { g_sink = medi.predict(x).data()[0]; }, min_reps, min_seconds);
  return tm.best_ns / tb.best_ns;
}

}  // namespace medinet
