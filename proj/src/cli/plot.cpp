// Copyright 2026 The revsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "revsim/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <string>

#include "revsim/metrics/geometry.hpp"

namespace revsim::cli
{

namespace
{

struct Style
{
  const char * stroke;
  double width;
  const char * dash;
};

Style style_of(scenario::PolylineKind k)
{
  using scenario::PolylineKind;
  switch (k) {
    case PolylineKind::kLane: return {"#c7c7c7", 0.15, "1 1"};
    case PolylineKind::kRoadEdge: return {"#404040", 0.3, ""};
    case PolylineKind::kBrokenLine: return {"#8c8c8c", 0.15, "3 3"};
    case PolylineKind::kYellowLine: return {"#e6b800", 0.2, ""};
    case PolylineKind::kCrosswalk: return {"#7fa7d9", 0.4, ""};
    case PolylineKind::kStopSign: return {"#b30000", 0.4, ""};
  }
  return {"#c7c7c7", 0.15, ""};
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

}  // namespace

std::string render_svg(const scenario::Scenario & s, const PlotOptions & opt)
{
  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  auto extend = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    lo_y = std::min(lo_y, y);
    hi_x = std::max(hi_x, x);
    hi_y = std::max(hi_y, y);
  };
  for (const auto & pl : s.map) {
    for (const auto & p : pl.points) extend(p.x, p.y);
  }
  for (const auto & a : s.agents) {
    for (const auto & st : a.states) {
      if (st.valid) extend(st.x, st.y);
    }
  }
  if (!(lo_x <= hi_x)) {
    lo_x = lo_y = -10.0;
    hi_x = hi_y = 10.0;
  }
  const double margin = 5.0;
  lo_x -= margin;
  lo_y -= margin;
  hi_x += margin;
  hi_y += margin;
  const double w = hi_x - lo_x;
  const double h = hi_y - lo_y;

  // World y points up; the SVG group flips it.
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w * opt.pixels_per_meter) +
         "\" height=\"" + fmt(h * opt.pixels_per_meter) + "\" viewBox=\"" + fmt(lo_x) + " " +
         fmt(-hi_y) + " " + fmt(w) + " " + fmt(h) + "\">\n";
  out += "<title>" + s.scenario_id + "</title>\n";
  out += "<rect x=\"" + fmt(lo_x) + "\" y=\"" + fmt(-hi_y) + "\" width=\"" + fmt(w) + "\" height=\"" +
         fmt(h) + "\" fill=\"#ffffff\"/>\n";
  out += "<g transform=\"scale(1,-1)\">\n";
  out += "<g id=\"map\" fill=\"none\">\n";
  for (const auto & pl : s.map) {
    const Style st = style_of(pl.kind);
    out += "<polyline class=\"" + std::string(scenario::to_string(pl.kind)) + "\" stroke=\"" + st.stroke +
           "\" stroke-width=\"" + fmt(st.width) + "\"";
    if (st.dash[0]) out += std::string(" stroke-dasharray=\"") + st.dash + "\"";
    out += " points=\"";
    for (std::size_t k = 0; k < pl.points.size(); ++k) {
      if (k) out += ' ';
      out += fmt(pl.points[k].x) + "," + fmt(pl.points[k].y);
    }
    out += "\"/>\n";
  }
  for (const auto & tl : s.traffic_lights) {
    out += "<circle class=\"traffic_light\" cx=\"" + fmt(tl.position.x) + "\" cy=\"" +
           fmt(tl.position.y) + "\" r=\"0.800\" fill=\"#555555\"/>\n";
  }
  out += "</g>\n";

  // Steps to draw: every stride-th, each agent's last valid step.
  const int stride = std::max(1, opt.stride);
  const int last = s.num_steps - 1;
  out += "<g id=\"agents\" stroke=\"#000000\" stroke-width=\"0.080\">\n";
  // Other agents first so the ego and adversary stay on top.
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(s.agents.size()); ++i) {
    if (!s.agents[i].is_ego && s.agents[i].id != opt.adv_id) order.push_back(i);
  }
  for (int i = 0; i < static_cast<int>(s.agents.size()); ++i) {
    if (s.agents[i].is_ego || s.agents[i].id == opt.adv_id) order.push_back(i);
  }
  for (int i : order) {
    const auto & a = s.agents[i];
    const char * color = a.is_ego ? "#d62728" : (a.id == opt.adv_id ? "#ff7f0e" : "#1f77b4");
    std::set<int> steps;
    int last_valid = -1;
    for (int t = 0; t < static_cast<int>(a.states.size()); ++t) {
      if (!a.states[t].valid) continue;
      last_valid = t;
      if (t % stride == 0 || t == last) steps.insert(t);
    }
    if (last_valid >= 0) steps.insert(last_valid);
    out += "<g class=\"agent\" id=\"agent-" + a.id + "\" fill=\"" + color + "\">\n";
    for (int t : steps) {
      const auto box = metrics::box_of(a, t);
      const double opacity = 0.15 + 0.85 * (last > 0 ? static_cast<double>(t) / last : 1.0);
      out += "<polygon data-step=\"" + std::to_string(t) + "\" fill-opacity=\"" + fmt(opacity) +
             "\" points=\"";
      const auto corners = box.corners();
      for (std::size_t k = 0; k < corners.size(); ++k) {
        if (k) out += ' ';
        out += fmt(corners[k].x) + "," + fmt(corners[k].y);
      }
      out += "\"/>\n";
    }
    out += "</g>\n";
  }
  out += "</g>\n</g>\n</svg>\n";
  return out;
}

}  // namespace revsim::cli
