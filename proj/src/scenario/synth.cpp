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

#include "revsim/scenario/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "revsim/common/angle.hpp"
#include "revsim/common/errors.hpp"
#include "revsim/kinematics/dynamics.hpp"
#include "revsim/metrics/geometry.hpp"

namespace revsim::scenario
{
namespace
{

constexpr double kMaxYawRate = 0.6;  // rad/s, well inside the token bounds
constexpr double kMaxAccel = 2.5;
constexpr double kMaxBrake = -6.0;

/// Road reference line: straight (curvature 0) or a circular arc.
struct Road
{
  double ox = 0.0;
  double oy = 0.0;
  double psi0 = 0.0;
  double curvature = 0.0;
  double length = 320.0;

  double heading_at(double s) const { return psi0 + curvature * s; }

  Point2 point(double s, double l) const
  {
    const double psi = heading_at(s);
    double px;
    double py;
    if (curvature == 0.0) {
      px = ox + s * std::cos(psi0);
      py = oy + s * std::sin(psi0);
    } else {
      const double r = 1.0 / curvature;
      px = ox + r * (std::sin(psi) - std::sin(psi0));
      py = oy + r * (-std::cos(psi) + std::cos(psi0));
    }
    return {px - l * std::sin(psi), py + l * std::cos(psi)};
  }

  /// (s, l) coordinates of a world point.
  std::pair<double, double> project(double x, double y) const
  {
    if (curvature == 0.0) {
      const double dx = x - ox;
      const double dy = y - oy;
      return {dx * std::cos(psi0) + dy * std::sin(psi0), -dx * std::sin(psi0) + dy * std::cos(psi0)};
    }
    const double rho = 1.0 / curvature;
    const double sigma = curvature > 0.0 ? 1.0 : -1.0;
    const double cx = ox - rho * std::sin(psi0);
    const double cy = oy + rho * std::cos(psi0);
    const double rx = x - cx;
    const double ry = y - cy;
    const double rn = std::hypot(rx, ry);
    const double nx = -rx / (sigma * rn);
    const double ny = -ry / (sigma * rn);
    const double psi = std::atan2(-nx, ny);
    const double s = angle_diff(psi, psi0) / curvature;
    return {s, rho - sigma * rn};
  }
};

struct Driver
{
  double desired_speed = 10.0;
  int lane = 0;
  int target_lane = 0;
  int change_step = -1;
};

std::vector<MapPolyline> build_map(const Road & road, int lanes, double lane_width, Rng & rng,
                                   double crosswalk_prob, std::vector<TrafficLight> & lights,
                                   int num_steps)
{
  std::vector<MapPolyline> map;
  const int samples = static_cast<int>(road.length / 10.0);
  auto line = [&](double l, PolylineKind kind) {
    MapPolyline pl;
    pl.kind = kind;
    for (int k = 0; k <= samples; ++k) {
      pl.points.push_back(road.point(road.length * k / samples, l));
    }
    map.push_back(std::move(pl));
  };
  const double half = 0.5 * lanes * lane_width;
  for (int i = 0; i < lanes; ++i) {
    line(-half + (i + 0.5) * lane_width, PolylineKind::kLane);
  }
  for (int i = 1; i < lanes; ++i) {
    line(-half + i * lane_width, PolylineKind::kBrokenLine);
  }
  line(-half, PolylineKind::kRoadEdge);
  line(half, PolylineKind::kRoadEdge);
  if (rng.bernoulli(crosswalk_prob)) {
    const double s = rng.uniform(60.0, road.length - 60.0);
    MapPolyline cw;
    cw.kind = PolylineKind::kCrosswalk;
    cw.points = {road.point(s - 2.0, -half), road.point(s - 2.0, half), road.point(s + 2.0, half),
                 road.point(s + 2.0, -half)};
    map.push_back(std::move(cw));
    TrafficLight tl;
    tl.position = road.point(s - 3.0, half + 1.0);
    tl.states.assign(num_steps, LightState::kUnknown);
    lights.push_back(std::move(tl));
  }
  return map;
}

double idm_accel(double v, double v0, double gap, double v_lead)
{
  constexpr double a0 = 1.5;
  constexpr double b = 2.0;
  constexpr double s0 = 3.0;
  constexpr double headway = 1.4;
  double a = a0 * (1.0 - std::pow(std::max(v, 0.0) / v0, 4));
  if (std::isfinite(gap)) {
    const double desired = s0 + v * headway + v * (v - v_lead) / (2.0 * std::sqrt(a0 * b));
    const double g = std::max(gap, 0.1);
    a -= a0 * std::pow(std::max(desired, 0.0) / g, 2);
  }
  return a;
}

bool any_overlap(const std::vector<AgentTrack> & agents, int num_steps)
{
  for (int t = 0; t < num_steps; ++t) {
    for (std::size_t i = 0; i < agents.size(); ++i) {
      for (std::size_t j = i + 1; j < agents.size(); ++j) {
        if (metrics::box_overlap(metrics::box_of(agents[i], t), metrics::box_of(agents[j], t))) {
          return true;
        }
      }
    }
  }
  return false;
}

/// One placement + simulation attempt. Returns false if the layout is
/// rejected.
bool try_simulate(Rng & rng, const Road & road, int lanes, double lane_width,
                  const SynthOptions & opt, int num_agents, std::vector<AgentTrack> & agents)
{
  agents.clear();
  std::vector<Driver> drivers;
  std::vector<std::pair<double, double>> placed;  // (s, l)
  const double half = 0.5 * lanes * lane_width;
  auto lane_center = [&](int lane) { return -half + (lane + 0.5) * lane_width; };

  for (int i = 0; i < num_agents; ++i) {
    AgentTrack t;
    t.id = "agent_" + std::to_string(i);
    t.kind = (i > 0 && rng.bernoulli(opt.cyclist_prob)) ? AgentKind::kCyclist : AgentKind::kVehicle;
    const auto shape = default_shape(t.kind);
    t.length = shape[0] + (t.kind == AgentKind::kVehicle ? rng.uniform(-0.4, 0.4) : 0.0);
    t.width = shape[1] + (t.kind == AgentKind::kVehicle ? rng.uniform(-0.15, 0.15) : 0.0);
    t.height = shape[2];

    Driver d;
    d.lane = rng.uniform_int(0, lanes - 1);
    d.target_lane = d.lane;
    d.desired_speed =
      t.kind == AgentKind::kCyclist ? rng.uniform(3.0, 6.0) : rng.uniform(6.0, 16.0);
    if (rng.bernoulli(opt.lane_change_prob) && lanes > 1) {
      int target = d.lane + (rng.bernoulli(0.5) ? 1 : -1);
      if (target < 0 || target >= lanes) target = d.lane + (d.lane == 0 ? 1 : -1);
      d.target_lane = target;
      d.change_step = rng.uniform_int(2, 12);
    }
    const double s = rng.uniform(30.0, 130.0);
    const double l = lane_center(d.lane) + rng.uniform(-0.3, 0.3);
    for (const auto & [ps, pl] : placed) {
      if (std::abs(pl - l) < 2.5 && std::abs(ps - s) < 12.0) {
        return false;
      }
    }
    placed.emplace_back(s, l);
    const Point2 p = road.point(s, l);
    AgentState st;
    st.x = p.x;
    st.y = p.y;
    st.heading = normalize_angle(road.heading_at(s) + rng.uniform(-0.02, 0.02));
    st.speed = std::min(d.desired_speed, rng.uniform(3.0, 14.0));
    st.valid = true;
    t.states.push_back(st);
    agents.push_back(std::move(t));
    drivers.push_back(d);
  }

  for (int step = 1; step < kNumSteps; ++step) {
    std::vector<AgentState> next(agents.size());
    std::vector<std::pair<double, double>> sl(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto & st = agents[i].states.back();
      sl[i] = road.project(st.x, st.y);
    }
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentState & st = agents[i].states.back();
      Driver & d = drivers[i];
      const int lane = (d.change_step >= 0 && step - 1 >= d.change_step) ? d.target_lane : d.lane;
      const double l_target = lane_center(lane);

      double gap = std::numeric_limits<double>::infinity();
      double v_lead = 0.0;
      for (std::size_t j = 0; j < agents.size(); ++j) {
        if (j == i) continue;
        const double ds = sl[j].first - sl[i].first;
        const bool in_path =
          std::abs(sl[j].second - sl[i].second) < 2.6 || std::abs(sl[j].second - l_target) < 2.6;
        if (ds > 0.0 && in_path) {
          const double g = ds - 0.5 * (agents[i].length + agents[j].length);
          if (g < gap) {
            gap = g;
            v_lead = agents[j].states.back().speed;
          }
        }
      }
      double accel = std::clamp(idm_accel(st.speed, d.desired_speed, gap, v_lead), kMaxBrake, kMaxAccel);
      if (st.speed + accel * kStepSeconds < 0.0) {
        accel = -st.speed / kStepSeconds;
      }

      const double lookahead = std::max(10.0, 1.6 * st.speed);
      const Point2 goal = road.point(sl[i].first + lookahead, l_target);
      const double alpha = angle_diff(std::atan2(goal.y - st.y, goal.x - st.x), st.heading);
      const double dist = std::hypot(goal.x - st.x, goal.y - st.y);
      const double mean_speed = std::max(st.speed + 0.5 * accel * kStepSeconds, 0.0);
      const double yaw_rate = std::clamp(mean_speed * 2.0 * std::sin(alpha) / dist, -kMaxYawRate, kMaxYawRate);

      next[i] = kinematics::integrate_forward(st, accel, yaw_rate, kStepSeconds);
    }
    for (std::size_t i = 0; i < agents.size(); ++i) agents[i].states.push_back(next[i]);
  }
  return !any_overlap(agents, kNumSteps);
}

}  // namespace

Scenario synth_scenario(Rng & rng, const std::string & scenario_id, const SynthOptions & opt)
{
  Scenario sc;
  sc.scenario_id = scenario_id;
  sc.dt = kStepSeconds;
  sc.num_steps = kNumSteps;

  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    Road road;
    road.ox = rng.uniform(-500.0, 500.0);
    road.oy = rng.uniform(-500.0, 500.0);
    road.psi0 = rng.uniform(-kPi, kPi);
    road.length = opt.road_length;
    if (rng.bernoulli(opt.curved_prob)) {
      const double radius = rng.uniform(120.0, 400.0);
      road.curvature = (rng.bernoulli(0.5) ? 1.0 : -1.0) / radius;
    }
    const int lanes = rng.uniform_int(opt.min_lanes, opt.max_lanes);
    const int num_agents = rng.uniform_int(opt.min_agents, opt.max_agents);

    std::vector<AgentTrack> agents;
    if (!try_simulate(rng, road, lanes, opt.lane_width, opt, num_agents, agents)) {
      continue;
    }
    std::vector<TrafficLight> lights;
    sc.map = build_map(road, lanes, opt.lane_width, rng, opt.crosswalk_prob, lights, kNumSteps);
    sc.traffic_lights = std::move(lights);
    std::vector<int> vehicles;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (agents[i].kind == AgentKind::kVehicle) vehicles.push_back(static_cast<int>(i));
    }
    agents[vehicles[rng.uniform_int(0, static_cast<int>(vehicles.size()) - 1)]].is_ego = true;
    sc.agents = std::move(agents);
    validate(sc);
    return sc;
  }
  throw GenerationError("no overlap-free layout for " + scenario_id + " after " +
                        std::to_string(opt.max_attempts) + " attempts");
}

std::vector<Scenario> synth_scenarios(int count, std::uint64_t seed, const SynthOptions & options)
{
  if (count < 1) {
    throw std::invalid_argument("synth_scenarios: count must be >= 1");
  }
  const Rng root(seed);
  std::vector<Scenario> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Rng rng = root.substream(static_cast<std::uint64_t>(k));
    out.push_back(synth_scenario(rng, "synth_" + std::to_string(seed) + "_" + std::to_string(k), options));
  }
  return out;
}

}  // namespace revsim::scenario
