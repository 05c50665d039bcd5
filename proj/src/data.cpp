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
#include <cmath>

#include "medinet/io.hpp"
#include "medinet/net.hpp"

namespace medinet {

const std::vector<std::string> kShapeClasses = {
    "disk", "square", "triangle", "plus",    "ring",
    "frame", "hbars", "vbars",    "cross",   "ellipse"};

Tensor Dataset::batch(const std::vector<std::size_t>& idx) const {
  if (idx.empty()) throw std::invalid_argument("empty batch");
  const Image& first = images.at(idx[0]);
  Tensor out(Shape{idx.size(), first.channels, first.height, first.width});
  const std::size_t per = first.data.size();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Image& img = images.at(idx[i]);
    if (img.data.size() != per || img.channels != first.channels) {
      throw ShapeError("dataset images have mixed shapes");
    }
    std::copy(img.data.begin(), img.data.end(),
              out.data().begin() + std::ptrdiff_t(i * per));
  }
  return out;
}

namespace {

// Inside test for class `cls`, in coordinates relative to the shape center.
bool inside(int cls, double dx, double dy, double r, double t) {
  const double d = std::hypot(dx, dy);
  const double ax = std::fabs(dx), ay = std::fabs(dy);
  switch (cls) {
    case 0:
      return d < r;
    case 1:
      return std::max(ax, ay) < 0.8 * r;
    case 2: {
      // Upward triangle with apex at (0, -r) and base at y = 0.6 r.
      if (dy > 0.6 * r || dy < -r) return false;
      const double half = (dy + r) / 1.6 * 0.95;
      return ax < half;
    }
    case 3:
      return (ax < t && ay < r) || (ay < t && ax < r);
    case 4:
      return std::fabs(d - 0.75 * r) < t;
    case 5: {
      const double m = std::max(ax, ay);
      return m < 0.85 * r && m > 0.85 * r - 2.0 * t;
    }
    case 6:
      return ax < r && (ay < t * 0.75 || std::fabs(ay - 0.65 * r) < t * 0.75);
    case 7:
      return ay < r && (ax < t * 0.75 || std::fabs(ax - 0.65 * r) < t * 0.75);
    case 8:
      return ax < 0.8 * r && ay < 0.8 * r &&
             (std::fabs(dx - dy) < t * 1.1 || std::fabs(dx + dy) < t * 1.1);
    default:
      return (dx * dx) / (r * r) + (dy * dy) / (0.25 * r * r) < 1.0;
  }
}

Image render_shape(int cls, std::size_t channels, std::size_t size,
                   RngStream& rng) {
  const double s = double(size);
  const double r = s * rng.uniform(0.22, 0.36);
  const double cx = s / 2 + rng.uniform(-0.12, 0.12) * s;
  const double cy = s / 2 + rng.uniform(-0.12, 0.12) * s;
  const double t = rng.uniform(1.0, 1.75) * s / 32.0;

  // Foreground / background per channel, luma contrast at least 60.
  double fg[3], bg[3];
  do {
    for (std::size_t c = 0; c < 3; ++c) {
      fg[c] = rng.uniform(20.0, 235.0);
      bg[c] = rng.uniform(20.0, 235.0);
    }
    if (channels == 1) fg[1] = fg[2] = fg[0], bg[1] = bg[2] = bg[0];
  } while (std::fabs(0.299 * (fg[0] - bg[0]) + 0.587 * (fg[1] - bg[1]) +
                     0.114 * (fg[2] - bg[2])) < 60.0);

  // Mild texture: a background gradient plus small per-pixel jitter.
  const double gx = rng.uniform(-12.0, 12.0), gy = rng.uniform(-12.0, 12.0);
  Image img(channels, size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      // 2x2 supersampled coverage.
      int hits = 0;
      for (double oy : {0.25, 0.75})
        for (double ox : {0.25, 0.75})
          hits += inside(cls, x + ox - cx, y + oy - cy, r, t);
      const double cover = hits / 4.0;
      const double shade = gx * (x / s - 0.5) + gy * (y / s - 0.5);
      const double jitter = rng.uniform(-5.0, 5.0);
      for (std::size_t c = 0; c < channels; ++c) {
        const double v = cover * fg[c] + (1.0 - cover) * (bg[c] + shade) + jitter;
        img.at(c, y, x) = float(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  return img;
}

}  // namespace

Dataset make_shapes_dataset(std::size_t n, std::uint64_t seed,
                            std::size_t channels, std::size_t size) {
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("shapes dataset needs 1 or 3 channels");
  }
  if (size < 8) throw std::invalid_argument("shapes dataset size must be >= 8");
  Dataset d;
  d.num_classes = kShapeClasses.size();
  d.class_names = kShapeClasses;
  d.images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = int(i % d.num_classes);
    RngStream rng(seed, hash_combine(0x73686170ULL, i));
    d.images.push_back(render_shape(cls, channels, size, rng));
    d.labels.push_back(cls);
  }
  return d;
}

Dataset load_image_folder(const std::filesystem::path& root, std::size_t h,
                          std::size_t w, std::size_t channels) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw IoError("dataset root is not a directory: " + root.string());
  }
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  Dataset d;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c])) {
      if (e.is_regular_file() && is_image_path(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      d.images.push_back(
          resize_bilinear(convert_channels(read_image(f), channels), h, w));
      d.labels.push_back(int(c));
    }
    d.class_names.push_back(classes[c].filename().string());
  }
  d.num_classes = classes.size();
  if (d.images.empty()) throw IoError("no images found under " + root.string());
  return d;
}

}  // namespace medinet
