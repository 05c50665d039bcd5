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

#ifndef MEDINET_NET_HPP_
#define MEDINET_NET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "medinet/degrade.hpp"
#include "medinet/mediconv.hpp"
#include "medinet/tensor.hpp"

namespace medinet {

enum class Activation { kPrelu, kRelu };
enum class Pooling { kNone, kGlobalAverage };

struct ConvBlockSpec {
  std::size_t channels = 16;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  bool operator==(const ConvBlockSpec&) const = default;
};

// conv blocks -> optional pooling -> linear classifier. The first
// `medi_layers` conv blocks are MeDiConv, the rest standard.
struct NetworkSpec {
  std::size_t in_channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::vector<ConvBlockSpec> convs;
  Activation activation = Activation::kPrelu;
  Pooling pooling = Pooling::kNone;
  std::size_t num_classes = 10;
  std::size_t medi_layers = 0;
  std::size_t median_window = 3;
  bool mu_stop_gradient = false;

  // 6 x (3x3) blocks, 16-32-32-64-64-128, stride 2 at blocks 2, 4 and 6.
  static NetworkSpec toy(std::size_t medi_layers = 0,
                         std::size_t in_channels = 1);

  // Throws std::invalid_argument on an inconsistent shape chain.
  void validate() const;
  // (c, h, w) after every conv block.
  std::vector<Shape> block_shapes() const;
  std::size_t feature_size() const;
  bool operator==(const NetworkSpec&) const = default;
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

// Per-layer activations kept for backward.
struct ForwardTrace {
  std::vector<Tensor> pre;   // conv outputs
  std::vector<Tensor> post;  // after activation
  Tensor features;           // flattened classifier input (N, F, 1, 1)
};

class Model {
 public:
  // Conv weights Kaiming-uniform, PReLU slopes 0.25, linear layer
  // Kaiming-uniform with zero bias; all drawn from RngStream(seed, *).
  Model(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t num_conv() const { return convs_.size(); }
  const ConvLayer& conv(std::size_t i) const { return convs_[i]; }

  // Parameter tensors in a fixed order: per block (conv weights[, slopes]),
  // then linear weights and bias.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  // Pixel values in [0, 255] in, logits (N, classes, 1, 1) out. Scaling by
  // 1/255 happens inside. Caches state for backward().
  Tensor forward(const Tensor& x);
  // Gradients aligned with parameters().
  std::vector<Tensor> backward(const Tensor& d_logits);
  // Thread-safe inference; optionally returns every activation.
  Tensor predict(const Tensor& x, ForwardTrace* trace = nullptr) const;

  // Graph description (kinds and shapes), used to compare models.
  std::string describe() const;

 private:
  Tensor run(const Tensor& x, ForwardTrace& trace, bool cache);

  NetworkSpec spec_;
  std::vector<ConvLayer> convs_;
  std::vector<Tensor> slopes_;  // (1, c, 1, 1) per block, PReLU only
  Tensor linear_w_;             // (classes, F, 1, 1)
  Tensor linear_b_;             // (1, classes, 1, 1)
  std::optional<ForwardTrace> trace_;
};

struct LossResult {
  double loss = 0.0;  // mean over the batch
  std::size_t correct = 0;
  Tensor d_logits;
};
LossResult softmax_cross_entropy(const Tensor& logits,
                                 const std::vector<int>& labels);
std::vector<int> argmax_classes(const Tensor& logits);

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
  // The images at `idx`, stacked as (N, C, H, W).
  Tensor batch(const std::vector<std::size_t>& idx) const;
};

// Ten classes of 32x32 shapes (disk, square, triangle, plus, ring, frame,
// horizontal bars, vertical bars, cross, ellipse) with random position,
// size, intensities and mild texture. Sample i depends only on (seed, i);
// labels cycle through the classes.
Dataset make_shapes_dataset(std::size_t n, std::uint64_t seed,
                            std::size_t channels = 1, std::size_t size = 32);
extern const std::vector<std::string> kShapeClasses;

// One sub-directory per class (sorted by name), every readable image inside
// resized to (h, w) and converted to `channels`.
Dataset load_image_folder(const std::filesystem::path& root, std::size_t h,
                          std::size_t w, std::size_t channels);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 0.01;
  double lr_decay = 0.1;
  std::vector<std::size_t> decay_epochs;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(std::size_t epoch) const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SGD with momentum: v = m v + (g + wd p); p -= lr v. Each epoch visits a
// permutation drawn from RngStream(seed, epoch), so a run resumed from a
// checkpoint continues exactly as the uninterrupted one.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig cfg);

  const TrainConfig& config() const { return cfg_; }
  std::size_t epoch() const { return epoch_; }
  const std::vector<EpochStats>& history() const { return history_; }
  const std::vector<Tensor>& velocity() const { return velocity_; }

  // One optimizer step; returns the batch loss. Throws TrainingDiverged.
  LossResult step(const Tensor& x, const std::vector<int>& labels, double lr);
  EpochStats run_epoch(const Dataset& data);
  bool done() const { return epoch_ >= cfg_.epochs; }

  void save_checkpoint(const std::filesystem::path& dir) const;
  // Restores weights, momentum buffers, epoch counter and history into
  // `model`, whose spec must match the checkpoint.
  static Trainer load_checkpoint(const std::filesystem::path& dir,
                                 Model& model);

 private:
  Model& model_;
  TrainConfig cfg_;
  std::vector<Tensor> velocity_;
  std::size_t epoch_ = 0;
  std::vector<EpochStats> history_;
};

using EpochCallback = std::function<void(const EpochStats&)>;
std::vector<EpochStats> train(Model& model, const Dataset& data,
                              const TrainConfig& cfg,
                              const EpochCallback& on_epoch = {});

// Spec + weights only.
void save_model(const std::filesystem::path& dir, const Model& model);
Model load_model(const std::filesystem::path& dir);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Items are
// independent, so the result does not depend on the thread count.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);
// MEDINET_THREADS, else 1.
std::size_t default_threads();

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? double(correct) / total : 0.0; }
};

// Degrades test image i with stream id i (config seed as the global seed),
// then classifies it.
EvalResult evaluate(const Model& model, const Dataset& data,
                    const std::optional<DegradationConfig>& degradation,
                    std::size_t threads = 1, std::size_t batch = 64);

struct EvalRow {
  std::string model;
  std::string degradation;
  std::string param_json;
  double accuracy = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  bool skipped = false;
  std::string skip_reason;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double wall_seconds = 0.0;

  const EvalRow* find(const std::string& model,
                      const std::string& degradation) const;
  // Header: model,degradation,param_json,accuracy,n_samples,seed. Skipped
  // cells carry "skipped" in the accuracy column.
  void write_csv(std::ostream& out) const;
};

struct NamedModel {
  std::string name;
  const Model* model;
};

// Every (model, degradation) cell, in model-major order. A degradation that
// cannot apply to the data (MG on gray images) yields skipped cells.
EvalReport robustness_matrix(const std::vector<NamedModel>& models,
                             const std::vector<NamedDegradation>& degradations,
                             const Dataset& data, std::size_t threads = 1);

// Mean over channels and samples of the per-pixel anisotropic total
// variation: (sum |dx| + sum |dy|) / (h * w).
double mean_total_variation(const Tensor& t);

struct FeatureGrid {
  Image image;
  std::size_t tiles = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t tile_h = 0;
  std::size_t tile_w = 0;
};

// Channels of conv block `layer` for one image, each rescaled to [0, 255]
// (flat channels become 0) and tiled row-major with a 1-pixel gap.
FeatureGrid dump_feature_maps(const Model& model, const Image& image,
                              std::size_t layer, bool pre_activation = true);

}  // namespace medinet

#endif  // MEDINET_NET_HPP_
