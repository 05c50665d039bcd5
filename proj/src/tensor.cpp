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

#include "medinet/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace medinet {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

ChannelScalars channel_mean(const Tensor& x) {
  ChannelScalars out{x.n(), x.c(), std::vector<double>(x.n() * x.c(), 0.0)};
  const double count = static_cast<double>(x.shape().plane());
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t j = 0; j < x.c(); ++j) {
      double acc = 0.0;
      for (float v : x.plane(i, j)) acc += v;
      out.values[i * x.c() + j] = count > 0 ? acc / count : 0.0;
    }
  }
  return out;
}

Tensor subtract_channel(const Tensor& x, const ChannelScalars& s) {
  if (s.n != x.n() || s.c != x.c()) {
    throw ShapeError("channel scalars do not match tensor " + x.shape().str());
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t j = 0; j < x.c(); ++j) {
      const double m = s.at(i, j);
      auto src = x.plane(i, j);
      auto dst = out.plane(i, j);
      for (std::size_t k = 0; k < src.size(); ++k) {
        dst[k] = static_cast<float>(double(src[k]) - m);
      }
    }
  }
  return out;
}

Tensor axpby(float a, const Tensor& x, float b, const Tensor& y) {
  if (x.shape() != y.shape()) {
    throw ShapeError("axpby shape mismatch " + x.shape().str() + " vs " +
                     y.shape().str());
  }
  Tensor out(x.shape());
  auto xs = x.data();
  auto ys = y.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = a * xs[i] + b * ys[i];
  return out;
}

double sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return acc;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff shape mismatch " + a.shape().str() +
                     " vs " + b.shape().str());
  }
  float m = 0.0f;
  auto as = a.data();
  auto bs = b.data();
  for (std::size_t i = 0; i < as.size(); ++i) {
    m = std::max(m, std::fabs(as[i] - bs[i]));
  }
  return m;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated tensor stream");
  }
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  const Shape& s = t.shape();
  for (std::size_t d : {s.n, s.c, s.h, s.w}) {
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw IoError("failed writing tensor stream");
}

Tensor read_tensor(std::istream& in) {
  Shape s;
  s.n = get_u32(in);
  s.c = get_u32(in);
  s.h = get_u32(in);
  s.w = get_u32(in);
  std::vector<float> data(s.numel());
  for (float& v : data) v = std::bit_cast<float>(get_u32(in));
  return Tensor(s, std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace medinet
