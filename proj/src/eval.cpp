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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "medinet/io.hpp"
#include "medinet/net.hpp"

namespace medinet {

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::size_t default_threads() {
  if (const char* env = std::getenv("MEDINET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return std::size_t(v);
  }
  return 1;
}

EvalResult evaluate(const Model& model, const Dataset& data,
                    const std::optional<DegradationConfig>& degradation,
                    std::size_t threads, std::size_t batch) {
  if (batch == 0) throw std::invalid_argument("evaluation batch must be > 0");
  if (degradation) degradation->validate();
  const std::size_t n = data.size();
  const std::size_t chunks = (n + batch - 1) / batch;
  std::vector<std::size_t> correct(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t b) {
    const std::size_t lo = b * batch, hi = std::min(n, lo + batch);
    Dataset local;
    std::vector<std::size_t> idx;
    for (std::size_t i = lo; i < hi; ++i) {
      local.images.push_back(degradation ? degrade(data.images[i], *degradation, i)
                                         : data.images[i]);
      idx.push_back(i - lo);
    }
    const auto pred = argmax_classes(model.predict(local.batch(idx)));
    for (std::size_t i = lo; i < hi; ++i) {
      correct[b] += pred[i - lo] == data.labels[i];
    }
  });
  EvalResult r;
  r.total = n;
  for (std::size_t c : correct) r.correct += c;
  return r;
}

const EvalRow* EvalReport::find(const std::string& model,
                                const std::string& degradation) const {
  for (const auto& r : rows) {
    if (r.model == model && r.degradation == degradation) return &r;
  }
  return nullptr;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "model,degradation,param_json,accuracy,n_samples,seed\n";
  char acc[32];
  for (const auto& r : rows) {
    if (r.skipped) {
      std::snprintf(acc, sizeof(acc), "skipped");
    } else {
      std::snprintf(acc, sizeof(acc), "%.6f", r.accuracy);
    }
    out << csv_field(r.model) << ',' << csv_field(r.degradation) << ','
        << csv_field(r.param_json) << ',' << acc << ',' << r.n_samples << ','
        << r.seed << '\n';
  }
}

EvalReport robustness_matrix(const std::vector<NamedModel>& models,
                             const std::vector<NamedDegradation>& degradations,
                             const Dataset& data, std::size_t threads) {
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport rep;
  const bool gray = !data.images.empty() && data.images[0].channels != 3;
  for (const auto& m : models) {
    for (const auto& d : degradations) {
      EvalRow row;
      row.model = m.name;
      row.degradation = d.name;
      row.param_json = to_json(d.config).dump();
      row.seed = d.config.seed;
      row.n_samples = data.size();
      if (gray && std::holds_alternative<MgNoise>(d.config.noise)) {
        row.skipped = true;
        row.skip_reason = "MG noise needs RGB images";
        row.accuracy = std::nan("");
      } else {
        row.accuracy = evaluate(*m.model, data, d.config, threads).accuracy();
      }
      rep.rows.push_back(std::move(row));
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

double mean_total_variation(const Tensor& t) {
  if (t.numel() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < t.n(); ++n)
    for (std::size_t c = 0; c < t.c(); ++c) {
      double tv = 0.0;
      for (std::size_t y = 0; y < t.h(); ++y)
        for (std::size_t x = 0; x < t.w(); ++x) {
          const float v = t.at(n, c, y, x);
          if (x + 1 < t.w()) tv += std::fabs(t.at(n, c, y, x + 1) - v);
          if (y + 1 < t.h()) tv += std::fabs(t.at(n, c, y + 1, x) - v);
        }
      total += tv / double(t.h() * t.w());
    }
  return total / double(t.n() * t.c());
}

FeatureGrid dump_feature_maps(const Model& model, const Image& image,
                              std::size_t layer, bool pre_activation) {
  if (layer >= model.num_conv()) {
    throw std::invalid_argument("layer index " + std::to_string(layer) +
                                " out of range (model has " +
                                std::to_string(model.num_conv()) + " blocks)");
  }
  ForwardTrace trace;
  model.predict(to_tensor(image), &trace);
  const Tensor& maps = pre_activation ? trace.pre[layer] : trace.post[layer];
  FeatureGrid g;
  g.tiles = maps.c();
  g.cols = std::size_t(std::ceil(std::sqrt(double(g.tiles))));
  g.rows = (g.tiles + g.cols - 1) / g.cols;
  g.tile_h = maps.h();
  g.tile_w = maps.w();
  g.image = Image(1, g.rows * (g.tile_h + 1) - 1, g.cols * (g.tile_w + 1) - 1,
                  128.0f);
  for (std::size_t c = 0; c < g.tiles; ++c) {
    auto plane = maps.plane(0, c);
    const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
    const float range = *hi - *lo;
    const std::size_t oy = (c / g.cols) * (g.tile_h + 1);
    const std::size_t ox = (c % g.cols) * (g.tile_w + 1);
    for (std::size_t y = 0; y < g.tile_h; ++y)
      for (std::size_t x = 0; x < g.tile_w; ++x) {
        const float v = plane[y * g.tile_w + x];
        g.image.at(0, oy + y, ox + x) =
            range > 0.0f ? std::round((v - *lo) / range * 255.0f) : 0.0f;
      }
  }
  return g;
}

}  // namespace medinet
