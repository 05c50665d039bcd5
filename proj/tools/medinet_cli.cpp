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

// medinet command line: degrade corpora, generate data, train, evaluate,
// gradcheck, benchmark and visualize.
//
// Exit codes: 0 success, 1 validation failure, 2 IO failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "medinet/bench.hpp"
#include "medinet/corpus.hpp"
#include "medinet/degrade.hpp"
#include "medinet/gradcheck.hpp"
#include "medinet/io.hpp"
#include "medinet/net.hpp"
#include "medinet/plot.hpp"

namespace fs = std::filesystem;
using namespace medinet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

// Raised when an artifact exists and --force was not given.
class OverwriteError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Global {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t threads = 1;
  bool force = false;
};

// Creates `dir` and refuses to clobber any of `artifacts` inside it.
void prepare_out(const fs::path& dir, const std::vector<fs::path>& artifacts,
                 const Global& g) {
  if (dir.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(dir);
  if (g.force) return;
  for (const auto& a : artifacts) {
    if (fs::exists(dir / a)) {
      throw OverwriteError((dir / a).string() +
                           " exists; pass --force to overwrite");
    }
  }
}

void refuse_existing_file(const fs::path& file, const Global& g) {
  if (!g.force && fs::exists(file)) {
    throw OverwriteError(file.string() + " exists; pass --force to overwrite");
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + p.string());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Inline spec ("gb:3,13+sp:0.05+s:2+c:40") or a JSON file. The global seed,
// when given, overrides the one in the config.
DegradationConfig load_degradation(const std::string& arg, const Global& g) {
  DegradationConfig cfg;
  if (fs::is_regular_file(arg)) {
    try {
      cfg = degradation_from_json(read_json_file(arg));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(arg + ": " + e.what());
    }
    if (g.seed_given) cfg.seed = g.seed;
  } else {
    cfg = parse_degradation(arg, g.seed);
  }
  cfg.validate();
  return cfg;
}

// "base" or "mediK".
std::optional<std::size_t> medi_layers_from_name(const std::string& name) {
  if (name == "base" || name == "baseline") return 0;
  if (name.rfind("medi", 0) == 0 && name.size() > 4) {
    const std::string digits = name.substr(4);
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      return std::stoul(digits);
    }
  }
  return std::nullopt;
}

// Synthetic train and test splits come from disjoint derived seeds.
std::uint64_t train_data_seed(std::uint64_t seed) {
  return hash_combine(seed, 0x747261696eULL);
}
std::uint64_t test_data_seed(std::uint64_t seed) {
  return hash_combine(seed, 0x74657374ULL);
}

struct DataArgs {
  bool synthetic = false;
  std::string data;
  std::size_t n = 1000;
  std::size_t channels = 1;
  std::size_t size = 32;

  void add(CLI::App* cmd, const std::string& n_flag, std::size_t n_default) {
    n = n_default;
    cmd->add_flag("--synthetic", synthetic, "Use the generated shapes task");
    cmd->add_option("--data", data, "Folder-per-class image directory");
    cmd->add_option(n_flag, n, "Synthetic sample count")->capture_default_str();
    cmd->add_option("--channels", channels, "1 (gray) or 3 (RGB)")
        ->capture_default_str();
    cmd->add_option("--size", size, "Image side in pixels")->capture_default_str();
  }

  Dataset load(std::uint64_t data_seed) const {
    if (synthetic == !data.empty()) {
      throw std::invalid_argument("pass exactly one of --synthetic or --data");
    }
    if (channels != 1 && channels != 3) {
      throw std::invalid_argument("--channels must be 1 or 3");
    }
    if (synthetic) return make_shapes_dataset(n, data_seed, channels, size);
    if (!fs::is_directory(data)) throw IoError("no such directory: " + data);
    return load_image_folder(data, size, size, channels);
  }
};

struct TrainArgs {
  std::string config;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::string decay_epochs;

  void add(CLI::App* cmd) {
    cmd->add_option("--train-config", config, "TrainConfig JSON file");
    cmd->add_option("--epochs", epochs, "Epochs (default 10)");
    cmd->add_option("--batch", batch, "Batch size (default 32)");
    cmd->add_option("--lr", lr, "Learning rate (default 0.01)");
    cmd->add_option("--momentum", momentum, "SGD momentum (default 0.9)");
    cmd->add_option("--weight-decay", weight_decay, "L2 weight decay (default 0)");
    cmd->add_option("--decay-epochs", decay_epochs,
                    "Comma list of epochs where lr is multiplied by lr_decay");
  }

  TrainConfig build(const Global& g) const {
    TrainConfig cfg;
    if (!config.empty()) cfg = train_config_from_json(read_json_file(config));
    if (config.empty() || g.seed_given) cfg.seed = g.seed;
    if (epochs) cfg.epochs = *epochs;
    if (batch) cfg.batch_size = *batch;
    if (lr) cfg.lr = *lr;
    if (momentum) cfg.momentum = *momentum;
    if (weight_decay) cfg.weight_decay = *weight_decay;
    if (!decay_epochs.empty()) {
      cfg.decay_epochs.clear();
      for (const auto& t : split(decay_epochs, ',')) cfg.decay_epochs.push_back(std::stoul(t));
    }
    cfg.validate();
    return cfg;
  }
};

NetworkSpec spec_for(const std::string& name, std::size_t channels,
                     const std::string& spec_file) {
  NetworkSpec spec;
  if (!spec_file.empty()) {
    spec = network_spec_from_json(read_json_file(spec_file));
    if (auto k = medi_layers_from_name(name)) spec.medi_layers = *k;
  } else {
    const auto k = medi_layers_from_name(name);
    if (!k) throw std::invalid_argument("unknown model name '" + name + "'");
    spec = NetworkSpec::toy(*k, channels);
  }
  spec.validate();
  return spec;
}

void write_history_csv(const fs::path& p, const std::vector<EpochStats>& hist) {
  std::ostringstream s;
  s << "epoch,loss,accuracy,lr,seconds\n";
  char buf[160];
  for (const auto& e : hist) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.6f,%.9g,%.3f\n", e.epoch, e.loss,
                  e.accuracy, e.lr, e.seconds);
    s << buf;
  }
  write_text(p, s.str());
}

void write_history_svg(const fs::path& p, const std::vector<EpochStats>& hist) {
  PlotSeries loss{"loss", {}, {}}, acc{"train accuracy", {}, {}};
  for (const auto& e : hist) {
    loss.x.push_back(double(e.epoch));
    loss.y.push_back(e.loss);
    acc.x.push_back(double(e.epoch));
    acc.y.push_back(e.accuracy);
  }
  PlotOptions o;
  o.title = "training";
  o.x_label = "epoch";
  write_text(p, line_plot_svg({loss, acc}, o));
}

std::vector<EpochStats> train_model(Model& model, Trainer& trainer,
                                    const Dataset& data,
                                    std::optional<std::size_t> stop_after,
                                    const fs::path& checkpoint) {
  std::size_t ran = 0;
  while (!trainer.done() && (!stop_after || ran < *stop_after)) {
    const EpochStats s = trainer.run_epoch(data);
    ++ran;
    std::printf("epoch %zu loss %.6f acc %.4f lr %g %.1fs\n", s.epoch, s.loss,
                s.accuracy, s.lr, s.seconds);
    std::fflush(stdout);
    if (!checkpoint.empty()) trainer.save_checkpoint(checkpoint);
  }
  (void)model;
  return trainer.history();
}

// Saved models live in <run>/model or <run>/checkpoint; name them by run.
std::string model_label(const fs::path& dir) {
  fs::path p = fs::absolute(dir).lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  const std::string leaf = p.filename().string();
  if ((leaf == "model" || leaf == "checkpoint") && p.has_parent_path()) {
    return p.parent_path().filename().string();
  }
  return leaf;
}

// A model token is a saved model directory or a name (base, mediK).
struct ModelSource {
  std::string name;
  std::optional<Model> model;
};

ModelSource resolve_model(const std::string& token, std::size_t channels,
                          const std::string& spec_file, std::uint64_t seed) {
  if (fs::is_directory(token)) return {model_label(token), load_model(token)};
  return {token, Model(spec_for(token, channels, spec_file), seed)};
}

// --- subcommands ----------------------------------------------------------

struct DegradeArgs {
  std::string input;
  std::string config = "clean";
  std::string out;
  bool random_grid = false;
};

int cmd_degrade(const DegradeArgs& a, const Global& g) {
  const DegradationConfig cfg = load_degradation(a.config, g);
  const auto inputs = collect_images(a.input);
  if (inputs.empty()) throw IoError("no images under " + a.input);
  std::vector<fs::path> artifacts{"manifest.csv"};
  prepare_out(a.out, artifacts, g);
  CorpusOptions opts{a.out, g.threads, a.random_grid};
  const auto rows = degrade_corpus(inputs, a.input, cfg, opts);
  std::ostringstream s;
  write_manifest(s, rows);
  write_text(fs::path(a.out) / "manifest.csv", s.str());
  std::size_t bad = 0;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++bad;
      std::fprintf(stderr, "error: %s: %s\n", r.image_path.c_str(), r.error.c_str());
    }
  }
  std::printf("degraded %zu/%zu images (%s) -> %s\n", rows.size() - bad,
              rows.size(), a.random_grid ? "random grid" : cfg.name().c_str(),
              (fs::path(a.out) / "manifest.csv").c_str());
  return bad ? kExitIo : kExitOk;
}

struct GenDataArgs {
  std::string out;
  std::size_t n = 1000;
  std::size_t channels = 1;
  std::size_t size = 32;
};

int cmd_gen_data(const GenDataArgs& a, const Global& g) {
  if (a.channels != 1 && a.channels != 3) {
    throw std::invalid_argument("--channels must be 1 or 3");
  }
  if (!a.out.empty() && fs::is_directory(a.out) && !fs::is_empty(a.out) &&
      !g.force) {
    throw OverwriteError(a.out + " is not empty; pass --force to overwrite");
  }
  prepare_out(a.out, {}, g);
  const Dataset d = make_shapes_dataset(a.n, g.seed, a.channels, a.size);
  for (const auto& name : d.class_names) fs::create_directories(fs::path(a.out) / name);
  parallel_for(d.size(), g.threads, [&](std::size_t i) {
    char file[32];
    std::snprintf(file, sizeof(file), "%05zu.png", i);
    write_image(fs::path(a.out) / d.class_names[std::size_t(d.labels[i])] / file,
                d.images[i]);
  });
  std::printf("wrote %zu images in %zu classes to %s\n", d.size(),
              d.class_names.size(), a.out.c_str());
  return kExitOk;
}

struct TrainCmdArgs {
  DataArgs data;
  TrainArgs train;
  std::string model = "base";
  std::optional<std::size_t> medi_layers;
  std::string spec;
  std::string resume;
  std::string out;
  std::optional<std::size_t> stop_after;
};

int cmd_train(const TrainCmdArgs& a, const Global& g) {
  const std::vector<fs::path> artifacts{"loss.csv", "loss.svg", "model",
                                        "checkpoint"};
  prepare_out(a.out, artifacts, g);
  const fs::path out(a.out);

  std::optional<Model> model;
  std::optional<Trainer> trainer;
  if (!a.resume.empty()) {
    if (!fs::is_directory(a.resume)) throw IoError("no checkpoint at " + a.resume);
    model.emplace(load_model(a.resume));
    trainer.emplace(Trainer::load_checkpoint(a.resume, *model));
    std::printf("resuming at epoch %zu of %zu\n", trainer->epoch(),
                trainer->config().epochs);
  } else {
    std::string name = a.model;
    if (a.medi_layers) name = "medi" + std::to_string(*a.medi_layers);
    model.emplace(spec_for(name, a.data.channels, a.spec), g.seed);
    trainer.emplace(*model, a.train.build(g));
  }
  const Dataset data = a.data.load(train_data_seed(g.seed));
  if (data.num_classes != model->spec().num_classes ||
      data.images.front().channels != model->spec().in_channels) {
    throw std::invalid_argument("dataset does not match the network input/classes");
  }
  std::printf("%s", model->describe().c_str());
  const fs::path ckpt = out / "checkpoint";
  fs::create_directories(ckpt);
  const auto hist = train_model(*model, *trainer, data, a.stop_after, ckpt);
  fs::remove_all(out / "model");
  save_model(out / "model", *model);
  write_history_csv(out / "loss.csv", hist);
  write_history_svg(out / "loss.svg", hist);
  std::printf("saved %s\n", (out / "model").c_str());
  return kExitOk;
}

struct EvalCmdArgs {
  DataArgs data;
  std::string model;
  std::vector<std::string> noise;
  std::string out;
};

int cmd_eval(const EvalCmdArgs& a, const Global& g) {
  if (!fs::is_directory(a.model)) throw IoError("no model at " + a.model);
  const Model model = load_model(a.model);
  const Dataset data = a.data.load(test_data_seed(g.seed));
  std::vector<NamedDegradation> degs;
  if (a.noise.empty()) degs.push_back({"clean", DegradationConfig{}});
  for (const auto& n : a.noise) {
    const DegradationConfig c = load_degradation(n, g);
    degs.push_back({c.name(), c});
  }
  if (!a.out.empty()) refuse_existing_file(a.out, g);
  const EvalReport rep = robustness_matrix(
      {{model_label(a.model), &model}}, degs, data, g.threads);
  std::ostringstream s;
  rep.write_csv(s);
  if (!a.out.empty()) write_text(a.out, s.str());
  std::cout << s.str();
  return kExitOk;
}

struct MatrixArgs {
  DataArgs test;
  std::string train_data;
  std::size_t n_train = 5000;
  TrainArgs train;
  std::string models = "base,medi1";
  std::string spec;
  std::vector<std::string> noise;
  std::string sweep;
  std::string grid;
  bool with_clean = false;
  bool save_models = false;
  std::string out;
};

int cmd_matrix(const MatrixArgs& a, const Global& g) {
  prepare_out(a.out, {"report.csv", "report.svg", "models"}, g);
  const fs::path out(a.out);

  // Degradations first so argument errors surface before any training.
  std::vector<NamedDegradation> degs;
  std::vector<double> sweep_x;
  std::string sweep_kind;
  if (a.with_clean) degs.push_back({"clean", DegradationConfig{}});
  for (const auto& n : a.noise) {
    const DegradationConfig c = load_degradation(n, g);
    degs.push_back({c.name(), c});
  }
  if (!a.sweep.empty()) {
    const auto colon = a.sweep.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("--sweep wants kind:v1,v2,...");
    }
    sweep_kind = a.sweep.substr(0, colon);
    for (const auto& v : split(a.sweep.substr(colon + 1), ',')) {
      const DegradationConfig c = parse_degradation(sweep_kind + ":" + v, g.seed);
      degs.push_back({c.name(), c});
      sweep_x.push_back(std::stod(v));
    }
  }
  if (a.grid == "single") {
    for (auto& d : single_noise_grid(g.seed)) degs.push_back(d);
  } else if (a.grid == "combined") {
    for (auto& d : combined_grid(g.seed)) degs.push_back(d);
  } else if (!a.grid.empty()) {
    throw std::invalid_argument("--grid must be single or combined");
  }
  if (degs.empty()) {
    throw std::invalid_argument("give --noise, --sweep, --grid or --with-clean");
  }

  const Dataset test = a.test.load(test_data_seed(g.seed));
  std::optional<Dataset> train_set;
  std::vector<ModelSource> models;
  for (const auto& tok : split(a.models, ',')) {
    ModelSource src = resolve_model(tok, a.test.channels, a.spec, g.seed);
    if (!fs::is_directory(tok)) {
      if (!train_set) {
        DataArgs td = a.test;
        td.n = a.n_train;
        td.data = a.train_data;
        if (!a.test.synthetic && a.train_data.empty()) {
          throw std::invalid_argument("named models need --train-data with --data");
        }
        train_set = td.load(train_data_seed(g.seed));
      }
      std::printf("training %s\n", tok.c_str());
      Trainer trainer(*src.model, a.train.build(g));
      train_model(*src.model, trainer, *train_set, std::nullopt, {});
      if (a.save_models) save_model(out / "models" / tok, *src.model);
    }
    models.push_back(std::move(src));
  }
  std::vector<NamedModel> named;
  for (const auto& m : models) named.push_back({m.name, &*m.model});

  const EvalReport rep = robustness_matrix(named, degs, test, g.threads);
  std::ostringstream s;
  rep.write_csv(s);
  write_text(out / "report.csv", s.str());
  std::cout << s.str();

  PlotOptions po;
  po.y_label = "accuracy";
  po.fixed_y = true;
  std::vector<PlotSeries> series;
  if (!sweep_x.empty() && degs.size() == sweep_x.size()) {
    po.title = "accuracy under " + sweep_kind;
    po.x_label = sweep_kind;
    for (const auto& m : named) {
      PlotSeries ps{m.name, sweep_x, {}};
      for (const auto& d : degs) {
        const EvalRow* r = rep.find(m.name, d.name);
        ps.y.push_back(r && !r->skipped ? r->accuracy : std::nan(""));
      }
      series.push_back(ps);
    }
    write_text(out / "report.svg", line_plot_svg(series, po));
  } else {
    po.title = "accuracy by degradation";
    std::vector<std::string> cats;
    for (const auto& d : degs) cats.push_back(d.name);
    for (const auto& m : named) {
      PlotSeries ps{m.name, {}, {}};
      for (const auto& d : degs) {
        const EvalRow* r = rep.find(m.name, d.name);
        ps.y.push_back(r && !r->skipped ? r->accuracy : std::nan(""));
      }
      series.push_back(ps);
    }
    po.width = std::max<int>(640, int(cats.size() * 40 + 220));
    write_text(out / "report.svg", bar_plot_svg(cats, series, po));
  }
  std::printf("wrote %s and %s (%.1fs)\n", (out / "report.csv").c_str(),
              (out / "report.svg").c_str(), rep.wall_seconds);
  return kExitOk;
}

struct GradcheckArgs {
  std::string layer = "all";
  std::size_t trials = 20;
  std::size_t window = 3;
  std::size_t stride = 1;
};

int cmd_gradcheck(const GradcheckArgs& a, const Global& g) {
  std::vector<std::pair<std::string, ConvKind>> kinds;
  if (a.layer == "std" || a.layer == "all") kinds.push_back({"std", ConvKind::kStandard});
  if (a.layer == "medi" || a.layer == "all") kinds.push_back({"medi", ConvKind::kMedian});
  if (kinds.empty()) throw std::invalid_argument("--layer must be std, medi or all");
  constexpr double kTol = 1e-3;
  bool ok = true;
  for (const auto& [name, kind] : kinds) {
    GradcheckOptions o;
    o.kind = kind;
    o.trials = a.trials;
    o.window = a.window;
    o.stride = a.stride;
    o.seed = g.seed;
    const GradcheckReport r = gradcheck_layer(o);
    const bool pass = r.max_rel_error() <= kTol;
    ok = ok && pass;
    std::printf("%-5s trials %zu  max rel err weights %.3e  input %.3e  %s\n",
                name.c_str(), r.trials, r.max_rel_error_weights,
                r.max_rel_error_input, pass ? "PASS" : "FAIL");
  }
  return ok ? kExitOk : kExitValidation;
}

struct BenchArgs {
  std::string sizes = "128,512";
  std::string windows = "1,3,7,15";
  std::size_t channels = 16;
  std::size_t batch = 32;
  double min_seconds = 0.2;
  std::string out;
};

int cmd_bench(const BenchArgs& a, const Global& g) {
  BenchOptions o;
  o.sizes.clear();
  o.windows.clear();
  for (const auto& t : split(a.sizes, ',')) o.sizes.push_back(std::stoul(t));
  for (const auto& t : split(a.windows, ',')) o.windows.push_back(std::stoul(t));
  o.layer_channels = a.channels;
  o.model_batch = a.batch;
  o.min_seconds = a.min_seconds;
  o.seed = g.seed;
  if (!a.out.empty()) refuse_existing_file(a.out, g);
  const BenchReport r = run_bench(o);
  std::ostringstream s;
  r.write_csv(s);
  if (!a.out.empty()) write_text(a.out, s.str());
  std::cout << s.str();
  for (std::size_t size : o.sizes) {
    for (std::size_t w : o.windows) {
      const BenchRow* sort = r.find("median_sort", size, w);
      const BenchRow* hist = r.find("median_hist", size, w);
      std::fprintf(stderr, "size %zu window %zu: hist speedup over sort %.2fx\n",
                   size, w, sort->ns_per_pixel / hist->ns_per_pixel);
    }
  }
  return kExitOk;
}

struct VisualizeArgs {
  std::string models = "base,medi1";
  std::string spec;
  std::string image;
  std::size_t n = 20;
  std::size_t channels = 1;
  std::string noise;
  std::size_t layer = 0;
  std::string out;
};

int cmd_visualize(const VisualizeArgs& a, const Global& g) {
  const auto tokens = split(a.models, ',');
  std::vector<fs::path> artifacts{"tv.csv"};
  for (const auto& t : tokens) {
    artifacts.push_back((fs::is_directory(t) ? model_label(t) : t) + "_layer" +
                        std::to_string(a.layer) + ".png");
  }
  prepare_out(a.out, artifacts, g);
  std::optional<DegradationConfig> deg;
  if (!a.noise.empty()) deg = load_degradation(a.noise, g);

  std::vector<Image> images;
  if (!a.image.empty()) {
    images.push_back(convert_channels(read_image(a.image), a.channels));
  } else {
    images = make_shapes_dataset(a.n, test_data_seed(g.seed), a.channels).images;
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (deg) images[i] = degrade(images[i], *deg, i);
  }

  std::ostringstream csv;
  csv << "model,layer,degradation,mean_tv,n_images\n";
  for (const auto& tok : tokens) {
    // Names give freshly initialized networks from --seed, so every variant
    // shares conv weights.
    const ModelSource src = resolve_model(tok, a.channels, a.spec, g.seed);
    const Model& m = *src.model;
    if (a.layer >= m.num_conv()) throw std::invalid_argument("--layer out of range");
    if (images.front().channels != m.spec().in_channels ||
        images.front().height != m.spec().height ||
        images.front().width != m.spec().width) {
      throw std::invalid_argument("image shape does not match model input");
    }
    double tv = 0.0;
    for (const auto& img : images) {
      ForwardTrace trace;
      m.predict(to_tensor(img), &trace);
      tv += mean_total_variation(trace.pre[a.layer]);
    }
    tv /= double(images.size());
    const FeatureGrid grid = dump_feature_maps(m, images.front(), a.layer);
    const std::string png = src.name + "_layer" +
                            std::to_string(a.layer) + ".png";
    write_image(fs::path(a.out) / png, grid.image);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", tv);
    csv << csv_field(src.name) << ',' << a.layer << ','
        << csv_field(deg ? deg->name() : "clean") << ',' << buf << ','
        << images.size() << '\n';
    std::printf("%s layer %zu mean TV %.6f -> %s\n", src.name.c_str(), a.layer,
                tv, png.c_str());
  }
  write_text(fs::path(a.out) / "tv.csv", csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"medinet: median pixel difference convolution toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  g.threads = default_threads();
  auto* seed_opt = app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (default $MEDINET_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--force", g.force, "Overwrite existing artifacts");

  DegradeArgs deg;
  auto* c_deg = app.add_subcommand("degrade", "Degrade an image or a directory of images");
  c_deg->add_option("input,--input", deg.input, "Image file or directory")->required();
  c_deg->add_option("--config", deg.config,
                    "DegradationConfig JSON file or inline spec like gb:3,13+sp:0.05+s:2+c:40")
      ->capture_default_str();
  c_deg->add_option("--out", deg.out, "Output directory")->required();
  c_deg->add_flag("--random-grid", deg.random_grid,
                  "Sample a random config from the degradation grid per image");

  GenDataArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Write the synthetic shapes task as PNG folders");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_option("--n", gen.n, "Images")->capture_default_str();
  c_gen->add_option("--channels", gen.channels, "1 or 3")->capture_default_str();
  c_gen->add_option("--size", gen.size, "Side in pixels")->capture_default_str();

  TrainCmdArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a baseline or MeDi-k network");
  tr.data.add(c_train, "--n-train", 5000);
  tr.train.add(c_train);
  c_train->add_option("--model", tr.model, "base or mediK")->capture_default_str();
  c_train->add_option("--medi-layers", tr.medi_layers, "Number of leading MeDiConv layers");
  c_train->add_option("--spec", tr.spec, "NetworkSpec JSON file");
  c_train->add_option("--resume", tr.resume, "Checkpoint directory to continue from");
  c_train->add_option("--stop-after", tr.stop_after, "Stop after this many epochs in this run");
  c_train->add_option("--out", tr.out, "Output directory")->required();

  EvalCmdArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a saved model");
  ev.data.add(c_eval, "--n-test", 1000);
  c_eval->add_option("--model", ev.model, "Saved model directory")->required();
  c_eval->add_option("--noise", ev.noise, "Degradation spec or JSON file (repeatable)");
  c_eval->add_option("--out", ev.out, "CSV report path");

  MatrixArgs mx;
  auto* c_mx = app.add_subcommand("matrix", "Robustness matrix over models and degradations");
  mx.test.add(c_mx, "--n-test", 1000);
  mx.train.add(c_mx);
  c_mx->add_option("--n-train", mx.n_train, "Synthetic training samples")->capture_default_str();
  c_mx->add_option("--train-data", mx.train_data, "Training folder for named models with --data");
  c_mx->add_option("--models", mx.models, "Comma list of names (base, mediK) or model dirs")
      ->capture_default_str();
  c_mx->add_option("--spec", mx.spec, "NetworkSpec JSON used for named models");
  c_mx->add_option("--noise", mx.noise, "Degradation spec or JSON file (repeatable)");
  c_mx->add_option("--sweep", mx.sweep, "kind:v1,v2,... e.g. sp:0.05,0.10,0.15,0.20");
  c_mx->add_option("--grid", mx.grid, "single or combined");
  c_mx->add_flag("--with-clean", mx.with_clean, "Add a clean column");
  c_mx->add_flag("--save-models", mx.save_models, "Keep trained models under out/models");
  c_mx->add_option("--out", mx.out, "Output directory")->required();

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of layer backward passes");
  c_gc->add_option("--layer", gc.layer, "std, medi or all")->capture_default_str();
  c_gc->add_option("--trials", gc.trials, "Random trials per layer")->capture_default_str();
  c_gc->add_option("--window", gc.window, "Median window")->capture_default_str();
  c_gc->add_option("--stride", gc.stride, "Convolution stride")->capture_default_str();

  BenchArgs bn;
  auto* c_bn = app.add_subcommand("bench", "Median and layer timings as CSV");
  c_bn->add_option("--sizes", bn.sizes, "Comma list of plane sides")->capture_default_str();
  c_bn->add_option("--windows", bn.windows, "Comma list of median windows")->capture_default_str();
  c_bn->add_option("--channels", bn.channels, "Layer channels")->capture_default_str();
  c_bn->add_option("--batch", bn.batch, "Model forward batch")->capture_default_str();
  c_bn->add_option("--min-seconds", bn.min_seconds, "Minimum time per measurement")
      ->capture_default_str();
  c_bn->add_option("--out", bn.out, "CSV path");

  VisualizeArgs vz;
  auto* c_vz = app.add_subcommand("visualize", "Feature-map tiles and total variation");
  c_vz->add_option("--models", vz.models, "Comma list of names or model dirs")->capture_default_str();
  c_vz->add_option("--spec", vz.spec, "NetworkSpec JSON used for named models");
  c_vz->add_option("--image", vz.image, "Input image (default: synthetic samples)");
  c_vz->add_option("--n", vz.n, "Synthetic images averaged for TV")->capture_default_str();
  c_vz->add_option("--channels", vz.channels, "1 or 3")->capture_default_str();
  c_vz->add_option("--noise", vz.noise, "Degradation applied to the inputs");
  c_vz->add_option("--layer", vz.layer, "Conv layer index")->capture_default_str();
  c_vz->add_option("--out", vz.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*c_deg) return cmd_degrade(deg, g);
    if (*c_gen) return cmd_gen_data(gen, g);
    if (*c_train) return cmd_train(tr, g);
    if (*c_eval) return cmd_eval(ev, g);
    if (*c_mx) return cmd_matrix(mx, g);
    if (*c_gc) return cmd_gradcheck(gc, g);
    if (*c_bn) return cmd_bench(bn, g);
    if (*c_vz) return cmd_visualize(vz, g);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitValidation;
}
