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

#include "revsim/metrics/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace revsim::metrics
{

std::array<scenario::Point2, 4> OrientedBox::corners() const
{
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  // front-left, front-right, rear-right, rear-left
  const std::array<std::array<double, 2>, 4> local{{{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}}};
  std::array<scenario::Point2, 4> out;
  for (int k = 0; k < 4; ++k) {
    out[k] = {cx + c * local[k][0] - s * local[k][1], cy + s * local[k][0] + c * local[k][1]};
  }
  return out;
}

OrientedBox box_of(const scenario::AgentState & s, double length, double width)
{
  return {s.x, s.y, s.heading, length, width};
}

OrientedBox box_of(const scenario::AgentTrack & t, int step)
{
  return box_of(t.states.at(step), t.length, t.width);
}

namespace
{

double projected_radius(const OrientedBox & b, double nx, double ny)
{
  const double c = std::cos(b.heading);
  const double s = std::sin(b.heading);
  return 0.5 * b.length * std::abs(c * nx + s * ny) + 0.5 * b.width * std::abs(-s * nx + c * ny);
}

}  // namespace

double box_separation(const OrientedBox & a, const OrientedBox & b)
{
  const double dx = b.cx - a.cx;
  const double dy = b.cy - a.cy;
  double gap = -std::numeric_limits<double>::infinity();
  for (const OrientedBox * owner : {&a, &b}) {
    const double c = std::cos(owner->heading);
    const double s = std::sin(owner->heading);
    const std::array<std::array<double, 2>, 2> axes{{{c, s}, {-s, c}}};
    for (const auto & n : axes) {
      const double dist = std::abs(dx * n[0] + dy * n[1]);
      gap = std::max(gap, dist - projected_radius(a, n[0], n[1]) - projected_radius(b, n[0], n[1]));
    }
  }
  return gap;
}

bool box_overlap(const OrientedBox & a, const OrientedBox & b) { return box_separation(a, b) <= 0.0; }

double contour_error(const scenario::AgentState & a, const scenario::AgentState & b, double length,
                     double width)
{
  const auto ca = box_of(a, length, width).corners();
  const auto cb = box_of(b, length, width).corners();
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    sum += std::hypot(ca[k].x - cb[k].x, ca[k].y - cb[k].y);
  }
  return 0.25 * sum;
}

}  // namespace revsim::metrics
