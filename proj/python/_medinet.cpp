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

// Python bindings. Arrays cross as float32 (n, c, h, w) tensors, float32
// (c, h, w) images and uint8 (h, w) planes; everything is copied.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include <json.hpp>

#include "medinet/degrade.hpp"
#include "medinet/gradcheck.hpp"
#include "medinet/io.hpp"
#include "medinet/median.hpp"
#include "medinet/mediconv.hpp"
#include "medinet/net.hpp"

namespace py = pybind11;
using namespace medinet;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const F32& a) {
  if (a.ndim() != 4) throw ShapeError("expected a 4-d (n, c, h, w) array");
  const Shape s{std::size_t(a.shape(0)), std::size_t(a.shape(1)),
                std::size_t(a.shape(2)), std::size_t(a.shape(3))};
  return Tensor(s, std::vector<float>(a.data(), a.data() + a.size()));
}

F32 array_from(const Tensor& t) {
  F32 out({t.n(), t.c(), t.h(), t.w()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Image image_from(const F32& a) {
  if (a.ndim() == 2) {
    Image img(1, std::size_t(a.shape(0)), std::size_t(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
  }
  if (a.ndim() != 3) throw ShapeError("expected a (c, h, w) or (h, w) image");
  Image img(std::size_t(a.shape(0)), std::size_t(a.shape(1)),
            std::size_t(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  return img;
}

F32 array_from(const Image& img) {
  F32 out({img.channels, img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

DegradationConfig config_from(const py::object& cfg, std::uint64_t seed) {
  if (py::isinstance<py::str>(cfg)) {
    const std::string s = cfg.cast<std::string>();
    if (!s.empty() && s.front() == '{') {
      return degradation_from_json(nlohmann::json::parse(s));
    }
    return parse_degradation(s, seed);
  }
  const std::string dumped =
      py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
  return degradation_from_json(nlohmann::json::parse(dumped));
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_medinet, m) {
  m.doc() = "Median pixel difference convolution, degradation model and toy network";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "median_filter",
      [](const F32& x, std::size_t window) {
        MedianConfig mc;
        mc.window = window;
        return array_from(median_filter(tensor_from(x), mc).values);
      },
      py::arg("x"), py::arg("window") = 3,
      "Per-plane median with replicate border on a float32 (n, c, h, w) array.");
  m.def(
      "median_filter_u8",
      [](const U8& x, std::size_t window) {
        if (x.ndim() != 2) throw ShapeError("expected an (h, w) uint8 plane");
        U8Plane p{std::size_t(x.shape(0)), std::size_t(x.shape(1)),
                  std::vector<std::uint8_t>(x.data(), x.data() + x.size())};
        MedianConfig mc;
        mc.window = window;
        const U8Plane r = median_filter_hist_u8(p, mc);
        U8 out({r.h, r.w});
        std::copy(r.data.begin(), r.data.end(), out.mutable_data());
        return out;
      },
      py::arg("x"), py::arg("window") = 3, "Histogram median on a uint8 plane.");

  py::class_<ConvLayer>(m, "ConvLayer")
      .def(py::init([](const F32& weights, const std::string& kind,
                       std::size_t stride, std::size_t window, bool mu_stop_gradient) {
             ConvLayerOptions o;
             o.kind = conv_kind_from_string(kind);
             o.stride = stride;
             o.median.window = window;
             o.mu_stop_gradient = mu_stop_gradient;
             return ConvLayer(tensor_from(weights), o);
           }),
           py::arg("weights"), py::arg("kind") = "medi", py::arg("stride") = 1,
           py::arg("window") = 3, py::arg("mu_stop_gradient") = false)
      .def("forward", [](ConvLayer& l, const F32& x) { return array_from(l.forward(tensor_from(x))); })
      .def("backward",
           [](const ConvLayer& l, const F32& g) {
             const LayerGradients r = l.backward(tensor_from(g));
             return py::make_tuple(array_from(r.d_weights), array_from(r.d_input));
           },
           "Returns (d_weights, d_input) for the last forward().")
      .def_property_readonly("weights", [](const ConvLayer& l) { return array_from(l.weights()); })
      .def_property_readonly("kind", [](const ConvLayer& l) { return to_string(l.kind()); });

  m.def(
      "degrade",
      [](const F32& image, const py::object& config, std::uint64_t stream_id,
         std::uint64_t seed) {
        return array_from(degrade(image_from(image), config_from(config, seed), stream_id));
      },
      py::arg("image"), py::arg("config"), py::arg("stream_id") = 0, py::arg("seed") = 0,
      "Degrade a (c, h, w) or (h, w) image. config is an inline spec such as\n"
      "'gb:3,13+sp:0.05+s:2+c:40', a JSON string or a dict.");
  m.def(
      "parse_degradation",
      [](const std::string& spec, std::uint64_t seed) {
        return json_to_py(to_json(parse_degradation(spec, seed)));
      },
      py::arg("spec"), py::arg("seed") = 0);
  m.def(
      "degradation_name",
      [](const py::object& config) { return config_from(config, 0).name(); },
      py::arg("config"));
  m.def("jpeg_quant_table", &jpeg_quant_table, py::arg("quality"),
        py::arg("chroma") = false);

  m.def(
      "read_image", [](const std::string& path) { return array_from(read_image(path)); },
      py::arg("path"));
  m.def(
      "write_image",
      [](const std::string& path, const F32& image) { write_image(path, image_from(image)); },
      py::arg("path"), py::arg("image"));

  m.def(
      "gradcheck",
      [](const std::string& kind, std::size_t trials, std::uint64_t seed,
         std::size_t window, std::size_t stride) {
        GradcheckOptions o;
        o.kind = conv_kind_from_string(kind);
        o.trials = trials;
        o.seed = seed;
        o.window = window;
        o.stride = stride;
        const GradcheckReport r = gradcheck_layer(o);
        py::dict d;
        d["weights"] = r.max_rel_error_weights;
        d["input"] = r.max_rel_error_input;
        d["trials"] = r.trials;
        return d;
      },
      py::arg("kind") = "medi", py::arg("trials") = 20, py::arg("seed") = 0,
      py::arg("window") = 3, py::arg("stride") = 1);

  py::class_<Model>(m, "Model")
      .def(py::init([](std::size_t medi_layers, std::uint64_t seed, std::size_t in_channels) {
             return Model(NetworkSpec::toy(medi_layers, in_channels), seed);
           }),
           py::arg("medi_layers") = 0, py::arg("seed") = 0, py::arg("in_channels") = 1,
           "Toy network with the first medi_layers convolutions as MeDiConv.")
      .def_static("load", [](const std::string& dir) { return load_model(dir); })
      .def("save", [](const Model& m, const std::string& dir) { save_model(dir, m); })
      .def("predict",
           [](const Model& m, const F32& x) {
             const Tensor y = m.predict(tensor_from(x));
             F32 out({y.n(), y.c()});
             std::copy(y.data().begin(), y.data().end(), out.mutable_data());
             return out;
           },
           "Logits for a (n, c, 32, 32) batch of 0..255 pixel values.")
      .def("feature_maps",
           [](const Model& m, const F32& x, std::size_t layer) {
             ForwardTrace t;
             m.predict(tensor_from(x), &t);
             if (layer >= t.pre.size()) throw ShapeError("layer out of range");
             return array_from(t.pre[layer]);
           },
           py::arg("x"), py::arg("layer") = 0, "Pre-activation output of a conv layer.")
      .def_property_readonly("spec", [](const Model& m) { return json_to_py(to_json(m.spec())); })
      .def_property_readonly("parameter_count", &Model::parameter_count)
      .def("__repr__", &Model::describe);

  m.def(
      "make_shapes_dataset",
      [](std::size_t n, std::uint64_t seed, std::size_t channels, std::size_t size) {
        const Dataset d = make_shapes_dataset(n, seed, channels, size);
        std::vector<std::size_t> idx(d.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return py::make_tuple(array_from(d.batch(idx)), d.labels, d.class_names);
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("channels") = 1, py::arg("size") = 32,
      "Returns (images (n, c, size, size), labels, class_names).");
  m.def(
      "mean_total_variation",
      [](const F32& x) { return mean_total_variation(tensor_from(x)); }, py::arg("x"));
}
