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

#include "medinet/conv.hpp"

#include <Eigen/Core>
#include <string>

namespace medinet {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Geometry {
  std::size_t n, c_in, h, w;
  std::size_t c_out, k;
  std::size_t ho, wo;
  ConvParams p;

  std::size_t rows() const { return c_in * k * k; }
  std::size_t cols() const { return n * ho * wo; }
};

Geometry make_geometry(const Tensor& x, const Tensor& w, ConvParams p) {
  check_conv_weights(w, x.c());
  if (p.stride == 0) throw std::invalid_argument("conv2d: stride must be >= 1");
  const std::size_t k = w.h();
  if (x.h() + 2 * p.padding < k || x.w() + 2 * p.padding < k) {
    throw ShapeError("conv2d: kernel larger than padded input " +
                     x.shape().str());
  }
  return Geometry{x.n(),
                  x.c(),
                  x.h(),
                  x.w(),
                  w.n(),
                  k,
                  conv_out_extent(x.h(), k, p),
                  conv_out_extent(x.w(), k, p),
                  p};
}

// Rows indexed (i, p, q), columns indexed (n, u, v).
RowMat im2col(const Tensor& x, const Geometry& g) {
  RowMat col(g.rows(), g.cols());
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.p.padding);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(g.h);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(g.w);
  const std::size_t per_sample = g.ho * g.wo;
  for (std::size_t i = 0; i < g.c_in; ++i) {
    for (std::size_t p = 0; p < g.k; ++p) {
      for (std::size_t q = 0; q < g.k; ++q) {
        double* row = col.row((i * g.k + p) * g.k + q).data();
        for (std::size_t n = 0; n < g.n; ++n) {
          auto plane = x.plane(n, i);
          double* dst = row + n * per_sample;
          for (std::size_t u = 0; u < g.ho; ++u) {
            const std::ptrdiff_t y = std::ptrdiff_t(u * g.p.stride + p) - pad;
            if (y < 0 || y >= h) {
              for (std::size_t v = 0; v < g.wo; ++v) dst[u * g.wo + v] = 0.0;
              continue;
            }
            const float* src = plane.data() + y * w;
            for (std::size_t v = 0; v < g.wo; ++v) {
              const std::ptrdiff_t xx =
                  std::ptrdiff_t(v * g.p.stride + q) - pad;
              dst[u * g.wo + v] = (xx < 0 || xx >= w) ? 0.0 : src[xx];
            }
          }
        }
      }
    }
  }
  return col;
}

Tensor col2im(const RowMat& col, const Geometry& g) {
  std::vector<double> acc(g.n * g.c_in * g.h * g.w, 0.0);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.p.padding);
  const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(g.h);
  const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(g.w);
  const std::size_t per_sample = g.ho * g.wo;
  for (std::size_t i = 0; i < g.c_in; ++i) {
    for (std::size_t p = 0; p < g.k; ++p) {
      for (std::size_t q = 0; q < g.k; ++q) {
        const double* row = col.row((i * g.k + p) * g.k + q).data();
        for (std::size_t n = 0; n < g.n; ++n) {
          double* plane = acc.data() + (n * g.c_in + i) * g.h * g.w;
          const double* src = row + n * per_sample;
          for (std::size_t u = 0; u < g.ho; ++u) {
            const std::ptrdiff_t y = std::ptrdiff_t(u * g.p.stride + p) - pad;
            if (y < 0 || y >= h) continue;
            for (std::size_t v = 0; v < g.wo; ++v) {
              const std::ptrdiff_t xx =
                  std::ptrdiff_t(v * g.p.stride + q) - pad;
              if (xx >= 0 && xx < w) plane[y * w + xx] += src[u * g.wo + v];
            }
          }
        }
      }
    }
  }
  std::vector<float> out(acc.begin(), acc.end());
  return Tensor(Shape{g.n, g.c_in, g.h, g.w}, std::move(out));
}

RowMat weights_matrix(const Tensor& w, const Geometry& g) {
  RowMat m(g.c_out, g.rows());
  auto src = w.data();
  for (std::size_t i = 0; i < src.size(); ++i) m.data()[i] = src[i];
  return m;
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t k, ConvParams p) {
  return (in + 2 * p.padding - k) / p.stride + 1;
}

void check_conv_weights(const Tensor& w, std::size_t c_in) {
  if (w.h() != w.w() || w.h() == 0) {
    throw ShapeError("conv weights must be square, got " + w.shape().str());
  }
  if (w.h() % 2 == 0) {
    throw ShapeError("conv kernel size must be odd, got " +
                     std::to_string(w.h()));
  }
  if (w.c() != c_in) {
    throw ShapeError("conv weights expect " + std::to_string(w.c()) +
                     " input channels, input has " + std::to_string(c_in));
  }
}

Tensor conv2d(const Tensor& x, const Tensor& w, ConvParams p) {
  const Geometry g = make_geometry(x, w, p);
  const RowMat col = im2col(x, g);
  const RowMat wm = weights_matrix(w, g);
  RowMat out = wm * col;
  Tensor y(Shape{g.n, g.c_out, g.ho, g.wo});
  const std::size_t per_sample = g.ho * g.wo;
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.c_out; ++o) {
      auto dst = y.plane(n, o);
      const double* src = out.row(o).data() + n * per_sample;
      for (std::size_t j = 0; j < per_sample; ++j) {
        dst[j] = static_cast<float>(src[j]);
      }
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& w,
                          const Tensor& grad_out, ConvParams p) {
  const Geometry g = make_geometry(x, w, p);
  if (grad_out.shape() != Shape{g.n, g.c_out, g.ho, g.wo}) {
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() +
                     " does not match output shape " +
                     Shape{g.n, g.c_out, g.ho, g.wo}.str());
  }
  const std::size_t per_sample = g.ho * g.wo;
  RowMat gm(g.c_out, g.cols());
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t o = 0; o < g.c_out; ++o) {
      auto src = grad_out.plane(n, o);
      double* dst = gm.row(o).data() + n * per_sample;
      for (std::size_t j = 0; j < per_sample; ++j) dst[j] = src[j];
    }
  }
  const RowMat col = im2col(x, g);
  const RowMat wm = weights_matrix(w, g);

  RowMat dw = gm * col.transpose();
  std::vector<float> dw_data(dw.data(), dw.data() + dw.size());
  Tensor d_weights(w.shape(), std::move(dw_data));

  RowMat dcol = wm.transpose() * gm;
  return ConvGrads{col2im(dcol, g), std::move(d_weights)};
}

}  // namespace medinet
