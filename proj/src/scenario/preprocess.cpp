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

#include "revsim/scenario/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "revsim/common/angle.hpp"

namespace revsim::scenario
{

Point2 map_center(const Scenario & s)
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
  if (s.map.empty()) {
    for (const auto & a : s.agents) {
      for (const auto & st : a.states) {
        if (st.valid) extend(st.x, st.y);
      }
    }
  }
  if (!(lo_x <= hi_x)) return {0.0, 0.0};
  return {0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y)};
}

namespace
{

double distance_at_first_valid(const AgentTrack & a, const AgentTrack & ego)
{
  for (std::size_t t = 0; t < a.states.size(); ++t) {
    if (a.states[t].valid && ego.states[t].valid) {
      return std::hypot(a.states[t].x - ego.states[t].x, a.states[t].y - ego.states[t].y);
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

CenteredScenario preprocess(const Scenario & s)
{
  CenteredScenario out;
  out.center = map_center(s);
  const double cx = out.center.x;
  const double cy = out.center.y;

  Scenario & c = out.scenario;
  c.scenario_id = s.scenario_id;
  c.dt = s.dt;
  c.num_steps = s.num_steps;
  c.map = s.map;
  for (auto & pl : c.map) {
    for (auto & p : pl.points) {
      p.x -= cx;
      p.y -= cy;
    }
  }
  c.traffic_lights = s.traffic_lights;
  for (auto & tl : c.traffic_lights) {
    tl.position.x -= cx;
    tl.position.y -= cy;
  }

  const int ego = s.ego_index();
  std::vector<int> order(s.agents.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(s.agents.size(), 0.0);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    dist[i] = static_cast<int>(i) == ego ? -1.0 : distance_at_first_valid(s.agents[i], s.agents[ego]);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  out.source_index = order;
  for (int idx : order) {
    AgentTrack t = s.agents[idx];
    for (auto & st : t.states) {
      st.x -= cx;
      st.y -= cy;
    }
    c.agents.push_back(std::move(t));
  }

  for (const auto & pl : c.map) {
    std::vector<SegmentFeature> segs;
    for (std::size_t k = 0; k + 1 < pl.points.size(); ++k) {
      SegmentFeature f;
      f.start = pl.points[k];
      f.end = pl.points[k + 1];
      const double dx = f.end.x - f.start.x;
      const double dy = f.end.y - f.start.y;
      f.length = std::hypot(dx, dy);
      f.dir_x = dx / f.length;
      f.dir_y = dy / f.length;
      f.heading = std::atan2(dy, dx);
      segs.push_back(f);
    }
    out.segments.push_back(std::move(segs));
  }

  out.state_features.reserve(c.agents.size() * c.num_steps);
  for (const auto & a : c.agents) {
    for (const auto & st : a.states) {
      StateFeature f{};
      f[0] = st.x;
      f[1] = st.y;
      f[2] = std::sin(st.heading);
      f[3] = std::cos(st.heading);
      f[4] = st.speed;
      f[5] = a.length;
      f[6] = a.width;
      f[7] = a.height;
      f[8] = a.kind == AgentKind::kVehicle ? 1.0 : 0.0;
      f[9] = a.kind == AgentKind::kPedestrian ? 1.0 : 0.0;
      f[10] = a.kind == AgentKind::kCyclist ? 1.0 : 0.0;
      f[11] = st.valid ? 1.0 : 0.0;
      f[12] = a.is_ego ? 1.0 : 0.0;
      out.state_features.push_back(f);
    }
  }
  return out;
}

Scenario mirror_y(const Scenario & s)
{
  Scenario m = s;
  for (auto & pl : m.map) {
    for (auto & p : pl.points) p.y = -p.y;
  }
  for (auto & tl : m.traffic_lights) tl.position.y = -tl.position.y;
  for (auto & a : m.agents) {
    for (auto & st : a.states) {
      st.y = -st.y;
      st.heading = normalize_angle(-st.heading);
    }
  }
  return m;
}

}  // namespace revsim::scenario
