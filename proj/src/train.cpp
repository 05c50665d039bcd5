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

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "medinet/net.hpp"

namespace medinet {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("train config: " + m);
  };
  if (epochs == 0) fail("epochs must be positive");
  if (batch_size == 0) fail("batch size must be positive");
  if (!(lr >= 0.0)) fail("lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
  if (!(lr_decay > 0.0)) fail("lr decay must be > 0");
  if (!(weight_decay >= 0.0)) fail("weight decay must be >= 0");
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double r = lr;
  for (std::size_t e : decay_epochs) {
    if (epoch >= e) r *= lr_decay;
  }
  return r;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"lr_decay", c.lr_decay},
          {"decay_epochs", c.decay_epochs},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.decay_epochs = j.value("decay_epochs", c.decay_epochs);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Trainer::Trainer(Model& model, TrainConfig cfg)
    : model_(model), cfg_(std::move(cfg)) {
  cfg_.validate();
  for (const Tensor* p : model_.parameters()) {
    velocity_.emplace_back(p->shape(), 0.0f);
  }
}

LossResult Trainer::step(const Tensor& x, const std::vector<int>& labels,
                         double lr) {
  const Tensor logits = model_.forward(x);
  LossResult r = softmax_cross_entropy(logits, labels);
  if (!std::isfinite(r.loss) || !logits.all_finite()) {
    throw TrainingDiverged("non-finite loss at epoch " +
                           std::to_string(epoch_) + " (loss " +
                           std::to_string(r.loss) + ", lr " +
                           std::to_string(lr) + ")");
  }
  const std::vector<Tensor> grads = model_.backward(r.d_logits);
  auto params = model_.parameters();
  const float m = float(cfg_.momentum), wd = float(cfg_.weight_decay);
  const float step = float(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto v = velocity_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = m * v[k] + (g[k] + wd * p[k]);
      p[k] -= step * v[k];
    }
  }
  return r;
}

EpochStats Trainer::run_epoch(const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("empty training set");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(cfg_.seed, hash_combine(0x7472616eULL, epoch_));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const double lr = cfg_.lr_at(epoch_);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < order.size(); b += cfg_.batch_size) {
    const std::size_t e = std::min(order.size(), b + cfg_.batch_size);
    std::vector<std::size_t> idx(order.begin() + std::ptrdiff_t(b),
                                 order.begin() + std::ptrdiff_t(e));
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(data.labels[i]);
    const LossResult r = step(data.batch(idx), labels, lr);
    loss_sum += r.loss * double(idx.size());
    correct += r.correct;
  }
  EpochStats s;
  s.epoch = epoch_;
  s.loss = loss_sum / double(data.size());
  s.accuracy = double(correct) / double(data.size());
  s.lr = lr;
  s.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  history_.push_back(s);
  ++epoch_;
  return s;
}

std::vector<EpochStats> train(Model& model, const Dataset& data,
                              const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  Trainer t(model, cfg);
  while (!t.done()) {
    const EpochStats s = t.run_epoch(data);
    if (on_epoch) on_epoch(s);
  }
  return t.history();
}

namespace {

namespace fs = std::filesystem;

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

nlohmann::json stats_json(const EpochStats& s) {
  return {{"epoch", s.epoch},
          {"loss", s.loss},
          {"accuracy", s.accuracy},
          {"lr", s.lr},
          {"seconds", s.seconds}};
}

void load_into(const fs::path& path, Tensor& dst) {
  Tensor t = load_tensor(path);
  if (t.shape() != dst.shape()) {
    throw ShapeError(path.string() + " has shape " + t.shape().str() +
                     ", expected " + dst.shape().str());
  }
  dst = std::move(t);
}

}  // namespace

void save_model(const fs::path& dir, const Model& model) {
  fs::create_directories(dir);
  nlohmann::json params = nlohmann::json::array();
  const auto names = model.parameter_names();
  const auto ps = model.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string file = "param_" + std::to_string(i) + ".bin";
    save_tensor(dir / file, *ps[i]);
    params.push_back({{"name", names[i]}, {"file", file}});
  }
  write_json(dir / "model.json", {{"format", "medinet-model"},
                                  {"version", 1},
                                  {"network", to_json(model.spec())},
                                  {"parameters", params}});
}

Model load_model(const fs::path& dir) {
  const nlohmann::json j = read_json(dir / "model.json");
  if (j.value("format", "") != "medinet-model") {
    throw IoError(dir.string() + " does not hold a model");
  }
  Model m(network_spec_from_json(j.at("network")), 0);
  auto ps = m.parameters();
  const auto& files = j.at("parameters");
  if (files.size() != ps.size()) {
    throw IoError("parameter count mismatch in " + dir.string());
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    load_into(dir / files[i].at("file").get<std::string>(), *ps[i]);
  }
  return m;
}

void Trainer::save_checkpoint(const fs::path& dir) const {
  save_model(dir, model_);
  nlohmann::json vel = nlohmann::json::array();
  for (std::size_t i = 0; i < velocity_.size(); ++i) {
    const std::string file = "velocity_" + std::to_string(i) + ".bin";
    save_tensor(dir / file, velocity_[i]);
    vel.push_back(file);
  }
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& s : history_) hist.push_back(stats_json(s));
  write_json(dir / "trainer.json", {{"train", to_json(cfg_)},
                                    {"epoch", epoch_},
                                    {"velocity", vel},
                                    {"history", hist}});
}

Trainer Trainer::load_checkpoint(const fs::path& dir, Model& model) {
  const nlohmann::json j = read_json(dir / "trainer.json");
  const nlohmann::json mj = read_json(dir / "model.json");
  if (network_spec_from_json(mj.at("network")) != model.spec()) {
    throw std::invalid_argument("checkpoint network does not match model");
  }
  model = load_model(dir);
  Trainer t(model, train_config_from_json(j.at("train")));
  const auto& vel = j.at("velocity");
  if (vel.size() != t.velocity_.size()) {
    throw IoError("velocity count mismatch in " + dir.string());
  }
  for (std::size_t i = 0; i < vel.size(); ++i) {
    load_into(dir / vel[i].get<std::string>(), t.velocity_[i]);
  }
  t.epoch_ = j.at("epoch").get<std::size_t>();
  for (const auto& h : j.at("history")) {
    t.history_.push_back({h.at("epoch").get<std::size_t>(),
                          h.at("loss").get<double>(),
                          h.at("accuracy").get<double>(),
                          h.at("lr").get<double>(),
                          h.at("seconds").get<double>()});
  }
  return t;
}

}  // namespace medinet
