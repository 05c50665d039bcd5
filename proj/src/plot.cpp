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

#include "medinet/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace medinet {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};
constexpr int kLeft = 64, kRight = 140, kTop = 36, kBottom = 48;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

class Canvas {
 public:
  Canvas(const PlotOptions& o) : o_(o) {
    s_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width
       << "\" height=\"" << o.height << "\" viewBox=\"0 0 " << o.width << ' '
       << o.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!o.title.empty())
      text(o.width / 2.0, 20, o.title, "middle", 13);
  }
  double pw() const { return o_.width - kLeft - kRight; }
  double ph() const { return o_.height - kTop - kBottom; }

  void text(double x, double y, const std::string& t, const char* anchor,
            int size = 11, bool vertical = false) {
    s_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" text-anchor=\""
       << anchor << "\" font-size=\"" << size << '"';
    if (vertical) s_ << " transform=\"rotate(-90 " << fmt(x) << ' ' << fmt(y) << ")\"";
    s_ << '>' << xml_escape(t) << "</text>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* color,
            double width = 1.0) {
    s_ << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\""
       << fmt(x1) << "\" y2=\"" << fmt(y1) << "\" stroke=\"" << color
       << "\" stroke-width=\"" << fmt(width) << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* color) {
    s_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
       << fmt(w) << "\" height=\"" << fmt(h) << "\" fill=\"" << color << "\"/>\n";
  }
  std::ostringstream& raw() { return s_; }

  void y_axis(const Range& r) {
    for (int i = 0; i <= 5; ++i) {
      const double v = r.lo + (r.hi - r.lo) * i / 5.0;
      const double y = kTop + ph() * (1.0 - i / 5.0);
      line(kLeft, y, kLeft + pw(), y, "#e0e0e0");
      text(kLeft - 6, y + 4, fmt(v), "end");
    }
    line(kLeft, kTop, kLeft, kTop + ph(), "black");
    line(kLeft, kTop + ph(), kLeft + pw(), kTop + ph(), "black");
    if (!o_.y_label.empty())
      text(16, kTop + ph() / 2, o_.y_label, "middle", 11, true);
    if (!o_.x_label.empty())
      text(kLeft + pw() / 2, o_.height - 10, o_.x_label, "middle");
  }
  void legend(const std::vector<PlotSeries>& series) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double y = kTop + 10 + 18.0 * double(i);
      const double x = kLeft + pw() + 12;
      rect(x, y - 8, 12, 10, kPalette[i % 8]);
      text(x + 18, y + 1, series[i].name, "start");
    }
  }
  std::string finish() {
    s_ << "</svg>\n";
    return s_.str();
  }

 private:
  PlotOptions o_;
  std::ostringstream s_;
};

Range y_range(const std::vector<PlotSeries>& series, const PlotOptions& o,
              bool include_zero) {
  Range r;
  if (o.fixed_y) {
    r.lo = o.y_min;
    r.hi = o.y_max;
  } else {
    for (const auto& s : series)
      for (double v : s.y) r.add(v);
    if (include_zero) r.add(0.0);
  }
  r.settle();
  return r;
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string line_plot_svg(const std::vector<PlotSeries>& series,
                          const PlotOptions& opts) {
  Canvas c(opts);
  Range xr;
  for (const auto& s : series)
    for (double v : s.x) xr.add(v);
  xr.settle();
  const Range yr = y_range(series, opts, false);
  c.y_axis(yr);
  for (int i = 0; i <= 5; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    c.text(kLeft + c.pw() * i / 5.0, kTop + c.ph() + 16, fmt(v), "middle");
  }
  auto px = [&](double v) { return kLeft + c.pw() * (v - xr.lo) / (xr.hi - xr.lo); };
  auto py = [&](double v) {
    return kTop + c.ph() * (1.0 - (v - yr.lo) / (yr.hi - yr.lo));
  };
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % 8];
    std::ostringstream pts;
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
      c.raw() << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\""
              << fmt(py(s.y[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    c.raw() << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
  }
  c.legend(series);
  return c.finish();
}

std::string bar_plot_svg(const std::vector<std::string>& categories,
                         const std::vector<PlotSeries>& series,
                         const PlotOptions& opts) {
  Canvas c(opts);
  const Range yr = y_range(series, opts, true);
  c.y_axis(yr);
  auto py = [&](double v) {
    return kTop + c.ph() * (1.0 - (v - yr.lo) / (yr.hi - yr.lo));
  };
  const double group = c.pw() / double(std::max<std::size_t>(categories.size(), 1));
  const double bar = group * 0.8 / double(std::max<std::size_t>(series.size(), 1));
  for (std::size_t ci = 0; ci < categories.size(); ++ci) {
    const double gx = kLeft + group * double(ci);
    c.text(gx + group / 2, kTop + c.ph() + 16, categories[ci], "middle", 9);
    for (std::size_t si = 0; si < series.size(); ++si) {
      if (ci >= series[si].y.size() || !std::isfinite(series[si].y[ci])) continue;
      const double v = std::clamp(series[si].y[ci], yr.lo, yr.hi);
      const double base = py(std::clamp(0.0, yr.lo, yr.hi));
      const double top = py(v);
      c.rect(gx + group * 0.1 + bar * double(si), std::min(top, base), bar,
             std::fabs(base - top), kPalette[si % 8]);
    }
  }
  c.legend(series);
  return c.finish();
}

}  // namespace medinet
