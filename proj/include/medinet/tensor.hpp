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

#ifndef MEDINET_TENSOR_HPP_
#define MEDINET_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace medinet {

// Raised when operand shapes are incompatible.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised on file read/write failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense (n, c, h, w) array of 32-bit reals. Row-major within a plane,
// channel-major within a sample.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& vec() const { return data_; }

  std::size_t index(std::size_t n, std::size_t c, std::size_t y,
                    std::size_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  float& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[index(n, c, y, x)];
  }
  float at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[index(n, c, y, x)];
  }

  // One (sample, channel) plane.
  std::span<float> plane(std::size_t n, std::size_t c) {
    return std::span<float>(data_).subspan(index(n, c, 0, 0), shape_.plane());
  }
  std::span<const float> plane(std::size_t n, std::size_t c) const {
    return std::span<const float>(data_).subspan(index(n, c, 0, 0),
                                                 shape_.plane());
  }
  // One full sample (all channels).
  std::span<const float> sample(std::size_t n) const {
    const std::size_t len = shape_.c * shape_.plane();
    return std::span<const float>(data_).subspan(n * len, len);
  }

  bool all_finite() const;
  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_{};
  std::vector<float> data_;
};

// Per-(sample, channel) scalars, indexed n * c + c.
struct ChannelScalars {
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * c + j]; }
};

ChannelScalars channel_mean(const Tensor& x);

// x - s broadcast over each (n, c) plane.
Tensor subtract_channel(const Tensor& x, const ChannelScalars& s);

Tensor axpby(float a, const Tensor& x, float b, const Tensor& y);

double sum(const Tensor& x);
float max_abs_diff(const Tensor& a, const Tensor& b);

// Flat binary format: four little-endian u32 dims (n, c, h, w) followed by
// little-endian f32 values.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace medinet

#endif  // MEDINET_TENSOR_HPP_
