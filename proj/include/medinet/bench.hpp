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

#ifndef MEDINET_BENCH_HPP_
#define MEDINET_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace medinet {

struct Timing {
  double best_ns = 0.0;    // fastest repetition
  double median_ns = 0.0;
  std::size_t reps = 0;
};

// Runs fn until both min_reps and min_seconds are reached.
Timing time_call(const std::function<void()>& fn, std::size_t min_reps,
                 double min_seconds);

// Interleaves a and b so drift hits both equally.
std::pair<Timing, Timing> time_pair(const std::function<void()>& a,
                                    const std::function<void()>& b,
                                    std::size_t min_reps, double min_seconds);

struct BenchRow {
  std::string op;
  std::size_t size = 0;
  std::size_t window = 0;
  double ns_per_pixel = 0.0;
  std::size_t reps = 0;
};

struct BenchOptions {
  std::vector<std::size_t> sizes{128, 512};
  std::vector<std::size_t> windows{1, 3, 7, 15};
  std::size_t layer_channels = 16;
  std::size_t model_batch = 32;
  std::size_t min_reps = 3;
  double min_seconds = 0.2;
  std::uint64_t seed = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  // MeDi-k over baseline toy-model forward time (best of paired reps).
  std::vector<std::pair<std::size_t, double>> forward_ratios;

  const BenchRow* find(const std::string& op, std::size_t size,
                       std::size_t window) const;
  // op,size,window,ns_per_pixel,reps; ratios as op "medi<k>_forward_ratio".
  void write_csv(std::ostream& out) const;
};

// Median rows: median_sort / median_hist / copy on a random u8 plane for each
// (size, window). Layer rows (window 0 for plain conv): conv_fwd, conv_bwd,
// medi_fwd, medi_bwd at 3x3 with layer_channels in and out.
BenchReport run_bench(const BenchOptions& opts);

// Toy-model forward ratio MeDi-k / baseline at batch `batch`.
double model_forward_ratio(std::size_t medi_layers, std::size_t batch,
                           std::size_t min_reps, double min_seconds,
                           std::uint64_t seed);

}  // namespace medinet

#endif  // MEDINET_BENCH_HPP_
