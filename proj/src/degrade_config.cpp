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

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "medinet/degrade.hpp"

namespace medinet {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("degradation config: " + msg);
}

}  // namespace

void DegradationConfig::validate() const {
  std::visit(overloaded{
                 [](const NoBlur&) {},
                 [](const GaussianBlur& b) {
                   require(b.sigma > 0.0, "gaussian sigma must be > 0");
                   require(b.ksize % 2 == 1, "gaussian ksize must be odd");
                 },
                 [](const MotionBlur& b) {
                   require(b.degree >= 1, "motion degree must be >= 1");
                 },
             },
             blur);
  require(scale == 1 || scale == 2 || scale == 4 || scale == 6 || scale == 8,
          "scale must be one of 1,2,4,6,8");
  std::visit(overloaded{
                 [](const NoNoise&) {},
                 [](const AwgnNoise& n) {
                   require(n.sigma >= 0.0, "awgn sigma must be >= 0");
                 },
                 [](const SaltPepperNoise& n) {
                   require(n.rho >= 0.0 && n.rho <= 1.0,
                           "salt-and-pepper rho must be in [0, 1]");
                 },
                 [](const HgNoise& n) {
                   require(n.alpha >= 0.0 && n.delta >= 0.0,
                           "hg alpha and delta must be >= 0");
                 },
                 [](const MgNoise& n) {
                   require(n.level >= 0.0, "mg level must be >= 0");
                 },
             },
             noise);
  require(jpeg >= 0 && jpeg <= 100, "jpeg quality must be 0 or in [1, 100]");
}

bool DegradationConfig::is_identity() const {
  const bool no_blur = std::holds_alternative<NoBlur>(blur) ||
                       (std::holds_alternative<MotionBlur>(blur) &&
                        std::get<MotionBlur>(blur).degree == 1);
  const bool no_noise = std::visit(
      overloaded{
          [](const NoNoise&) { return true; },
          [](const AwgnNoise& n) { return n.sigma == 0.0; },
          [](const SaltPepperNoise& n) { return n.rho == 0.0; },
          [](const HgNoise& n) { return n.alpha == 0.0 && n.delta == 0.0; },
          [](const MgNoise& n) { return n.level == 0.0; },
      },
      noise);
  return no_blur && no_noise && scale == 1 && jpeg == 0;
}

std::string DegradationConfig::name() const {
  std::vector<std::string> parts;
  std::visit(overloaded{
                 [](const NoBlur&) {},
                 [&](const GaussianBlur& b) {
                   parts.push_back("gb" + num(b.sigma));
                 },
                 [&](const MotionBlur& b) {
                   std::string s = "mb" + num(double(b.degree));
                   if (b.angle != 0.0) s += "a" + num(b.angle);
                   parts.push_back(s);
                 },
             },
             blur);
  std::visit(overloaded{
                 [](const NoNoise&) {},
                 [&](const AwgnNoise& n) { parts.push_back("awgn" + num(n.sigma)); },
                 [&](const SaltPepperNoise& n) { parts.push_back("sp" + num(n.rho)); },
                 [&](const HgNoise& n) {
                   parts.push_back("hg" + num(n.alpha) + "," + num(n.delta));
                 },
                 [&](const MgNoise& n) { parts.push_back("mg" + num(n.level)); },
             },
             noise);
  if (scale > 1) parts.push_back("s" + std::to_string(scale));
  if (jpeg > 0) parts.push_back("c" + std::to_string(jpeg));
  if (parts.empty()) return "clean";
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

bool DegradationConfig::operator==(const DegradationConfig& o) const {
  return to_json(*this) == to_json(o);
}

nlohmann::json to_json(const DegradationConfig& cfg) {
  nlohmann::json blur = std::visit(
      overloaded{
          [](const NoBlur&) { return nlohmann::json{{"type", "none"}}; },
          [](const GaussianBlur& b) {
            return nlohmann::json{
                {"type", "gaussian"}, {"sigma", b.sigma}, {"ksize", b.ksize}};
          },
          [](const MotionBlur& b) {
            return nlohmann::json{
                {"type", "motion"}, {"degree", b.degree}, {"angle", b.angle}};
          },
      },
      cfg.blur);
  nlohmann::json noise = std::visit(
      overloaded{
          [](const NoNoise&) { return nlohmann::json{{"type", "none"}}; },
          [](const AwgnNoise& n) {
            return nlohmann::json{{"type", "awgn"}, {"sigma", n.sigma}};
          },
          [](const SaltPepperNoise& n) {
            return nlohmann::json{{"type", "salt_pepper"}, {"rho", n.rho}};
          },
          [](const HgNoise& n) {
            return nlohmann::json{
                {"type", "hg"}, {"alpha", n.alpha}, {"delta", n.delta}};
          },
          [](const MgNoise& n) {
            return nlohmann::json{{"type", "mg"}, {"level", n.level}};
          },
      },
      cfg.noise);
  return nlohmann::json{{"blur", blur},
                        {"scale", cfg.scale},
                        {"noise", noise},
                        {"jpeg", cfg.jpeg},
                        {"seed", cfg.seed}};
}

DegradationConfig degradation_from_json(const nlohmann::json& j) {
  DegradationConfig cfg;
  try {
    const auto& blur = j.at("blur");
    const std::string bt = blur.at("type").get<std::string>();
    if (bt == "gaussian") {
      cfg.blur = GaussianBlur{blur.at("sigma").get<double>(),
                              blur.value("ksize", std::size_t{13})};
    } else if (bt == "motion") {
      cfg.blur = MotionBlur{blur.at("degree").get<std::size_t>(),
                            blur.value("angle", 0.0)};
    } else if (bt != "none") {
      throw std::invalid_argument("unknown blur type '" + bt + "'");
    }
    cfg.scale = j.at("scale").get<int>();
    const auto& noise = j.at("noise");
    const std::string nt = noise.at("type").get<std::string>();
    if (nt == "awgn") {
      cfg.noise = AwgnNoise{noise.at("sigma").get<double>()};
    } else if (nt == "salt_pepper") {
      cfg.noise = SaltPepperNoise{noise.at("rho").get<double>()};
    } else if (nt == "hg") {
      cfg.noise = HgNoise{noise.at("alpha").get<double>(),
                          noise.at("delta").get<double>()};
    } else if (nt == "mg") {
      cfg.noise = MgNoise{noise.at("level").get<double>()};
    } else if (nt != "none") {
      throw std::invalid_argument("unknown noise type '" + nt + "'");
    }
    cfg.jpeg = j.at("jpeg").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("degradation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<NamedDegradation> single_noise_grid(std::uint64_t seed) {
  std::vector<DegradationConfig> cfgs;
  auto add = [&](DegradationConfig c) {
    c.seed = seed;
    cfgs.push_back(c);
  };
  for (double s : {1.0, 2.0, 3.0}) add({.blur = GaussianBlur{s, 13}});
  for (std::size_t d : {10u, 20u, 30u, 40u}) add({.blur = MotionBlur{d, 0.0}});
  for (double s : {15.0, 25.0, 50.0}) add({.noise = AwgnNoise{s}});
  for (double r : {0.05, 0.10, 0.15, 0.20}) add({.noise = SaltPepperNoise{r}});
  for (auto [a, d] : {std::pair{20.0, 10.0}, std::pair{30.0, 10.0},
                      std::pair{30.0, 20.0}, std::pair{40.0, 10.0},
                      std::pair{40.0, 20.0}}) {
    add({.noise = HgNoise{a, d}});
  }
  add({.noise = MgNoise{75.0}});
  for (int c : {10, 20, 30, 40}) add({.jpeg = c});
  for (int s : {2, 4, 6, 8}) add({.scale = s});
  std::vector<NamedDegradation> out;
  for (const auto& c : cfgs) out.push_back({c.name(), c});
  return out;
}

std::vector<NamedDegradation> combined_grid(std::uint64_t seed) {
  const std::pair<const char*, BlurSpec> blurs[] = {
      {"GB", GaussianBlur{3.0, 13}}, {"MB", MotionBlur{20, 0.0}}};
  const std::pair<const char*, NoiseSpec> noises[] = {
      {"AWGN", AwgnNoise{25.0}},
      {"SP", SaltPepperNoise{0.05}},
      {"HG", HgNoise{40.0, 10.0}},
      {"MG", MgNoise{75.0}}};
  std::vector<NamedDegradation> out;
  for (const auto& [bn, b] : blurs) {
    for (const auto& [nn, n] : noises) {
      DegradationConfig c{b, 2, n, 40, seed};
      out.push_back({std::string(bn) + "+" + nn, c});
    }
  }
  return out;
}

DegradationConfig sample_grid_config(RngStream& rng, bool rgb,
                                     std::uint64_t seed) {
  DegradationConfig c;
  c.seed = seed;
  switch (rng.below(3)) {
    case 1:
      c.blur = GaussianBlur{double(1 + rng.below(3)), 13};
      break;
    case 2:
      c.blur = MotionBlur{10 * (1 + rng.below(4)), rng.uniform(0.0, 180.0)};
      break;
    default:
      break;
  }
  const int scales[] = {2, 4, 6, 8};
  c.scale = scales[rng.below(4)];
  switch (rng.below(rgb ? 4 : 3)) {
    case 0: {
      const double s[] = {15, 25, 50};
      c.noise = AwgnNoise{s[rng.below(3)]};
      break;
    }
    case 1: {
      const double r[] = {0.05, 0.10, 0.15, 0.20};
      c.noise = SaltPepperNoise{r[rng.below(4)]};
      break;
    }
    case 2:
      c.noise = HgNoise{double(20 + 10 * rng.below(3)),
                        rng.below(2) ? 20.0 : 10.0};
      break;
    default:
      c.noise = MgNoise{75.0};
      break;
  }
  c.jpeg = int(10 * rng.below(5));
  return c;
}

DegradationConfig parse_degradation(const std::string& spec,
                                    std::uint64_t seed) {
  DegradationConfig c;
  c.seed = seed;
  std::stringstream ss(spec);
  std::string tok;
  auto values = [](const std::string& rest) {
    std::vector<double> v;
    std::stringstream vs(rest);
    std::string item;
    while (std::getline(vs, item, ',')) v.push_back(std::stod(item));
    return v;
  };
  while (std::getline(ss, tok, '+')) {
    if (tok.empty() || tok == "clean" || tok == "none") continue;
    const auto colon = tok.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("degradation token '" + tok +
                                  "' needs kind:value");
    }
    const std::string kind = tok.substr(0, colon);
    std::vector<double> v;
    try {
      v = values(tok.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number in degradation token '" + tok +
                                  "'");
    }
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (v.size() < lo || v.size() > hi) {
        throw std::invalid_argument("wrong arity in degradation token '" +
                                    tok + "'");
      }
    };
    if (kind == "gb") {
      need(1, 2);
      c.blur = GaussianBlur{v[0], v.size() > 1 ? std::size_t(v[1]) : 13};
    } else if (kind == "mb") {
      need(1, 2);
      c.blur = MotionBlur{std::size_t(v[0]), v.size() > 1 ? v[1] : 0.0};
    } else if (kind == "awgn") {
      need(1, 1);
      c.noise = AwgnNoise{v[0]};
    } else if (kind == "sp") {
      need(1, 1);
      c.noise = SaltPepperNoise{v[0]};
    } else if (kind == "hg") {
      need(2, 2);
      c.noise = HgNoise{v[0], v[1]};
    } else if (kind == "mg") {
      need(1, 1);
      c.noise = MgNoise{v[0]};
    } else if (kind == "jpeg" || kind == "c") {
      need(1, 1);
      c.jpeg = int(v[0]);
    } else if (kind == "scale" || kind == "s") {
      need(1, 1);
      c.scale = int(v[0]);
    } else {
      throw std::invalid_argument("unknown degradation kind '" + kind + "'");
    }
  }
  c.validate();
  return c;
}

}  // namespace medinet
