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

#ifndef MEDINET_RNG_HPP_
#define MEDINET_RNG_HPP_

#include <array>
#include <cstdint>

#include "medinet/tensor.hpp"

namespace medinet {

std::uint64_t splitmix64(std::uint64_t& state);

// Stateless 64-bit mix of two words; used to derive per-item stream ids.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

// xoshiro256** seeded through splitmix64 from (seed, stream_id).
//
// Every sampler here is written out explicitly (no std:: distributions) so
// the sequence for a given (seed, stream_id) does not depend on the
// standard library implementation.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

Tensor rng_normal(RngStream& stream, Shape shape, float mean, float sigma);
Tensor rng_uniform(RngStream& stream, Shape shape, float lo, float hi);

}  // namespace medinet

#endif  // MEDINET_RNG_HPP_
