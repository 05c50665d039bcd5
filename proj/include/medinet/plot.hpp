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

#ifndef MEDINET_PLOT_HPP_
#define MEDINET_PLOT_HPP_

#include <string>
#include <vector>

namespace medinet {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 400;
  // When set, the y axis is fixed to [y_min, y_max] instead of fitted.
  bool fixed_y = false;
  double y_min = 0.0;
  double y_max = 1.0;
};

// Standalone SVG documents. Text is XML-escaped; NaN points are dropped.
std::string line_plot_svg(const std::vector<PlotSeries>& series,
                          const PlotOptions& opts);

// Grouped bars: one group per category, one bar per series (series.y is
// indexed by category; series.x is ignored).
std::string bar_plot_svg(const std::vector<std::string>& categories,
                         const std::vector<PlotSeries>& series,
                         const PlotOptions& opts);

std::string xml_escape(const std::string& s);

}  // namespace medinet

#endif  // MEDINET_PLOT_HPP_
