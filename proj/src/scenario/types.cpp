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

#include "revsim/scenario/types.hpp"

#include <cmath>

#include "revsim/common/angle.hpp"
#include "revsim/common/errors.hpp"

namespace revsim::scenario
{

int Scenario::ego_index() const
{
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].is_ego) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::string_view to_string(AgentKind kind)
{
  switch (kind) {
    case AgentKind::kVehicle:
      return "vehicle";
    case AgentKind::kPedestrian:
      return "pedestrian";
    case AgentKind::kCyclist:
      return "cyclist";
  }
  return "vehicle";
}

std::string_view to_string(PolylineKind kind)
{
  switch (kind) {
    case PolylineKind::kLane:
      return "lane";
    case PolylineKind::kRoadEdge:
      return "road_edge";
    case PolylineKind::kBrokenLine:
      return "broken_line";
    case PolylineKind::kYellowLine:
      return "yellow_line";
    case PolylineKind::kCrosswalk:
      return "crosswalk";
    case PolylineKind::kStopSign:
      return "stop_sign";
  }
  return "lane";
}

std::string_view to_string(LightState state)
{
  switch (state) {
    case LightState::kRed:
      return "red";
    case LightState::kYellow:
      return "yellow";
    case LightState::kGreen:
      return "green";
    case LightState::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<AgentKind> agent_kind_from_string(std::string_view s)
{
  for (auto k : {AgentKind::kVehicle, AgentKind::kPedestrian, AgentKind::kCyclist}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<PolylineKind> polyline_kind_from_string(std::string_view s)
{
  for (auto k :
       {PolylineKind::kLane, PolylineKind::kRoadEdge, PolylineKind::kBrokenLine,
        PolylineKind::kYellowLine, PolylineKind::kCrosswalk, PolylineKind::kStopSign}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<LightState> light_state_from_string(std::string_view s)
{
  for (auto k : {LightState::kRed, LightState::kYellow, LightState::kGreen, LightState::kUnknown}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::array<double, 3> default_shape(AgentKind kind)
{
  switch (kind) {
    case AgentKind::kVehicle:
      return {4.8, 2.0, 1.6};
    case AgentKind::kCyclist:
      return {1.8, 0.6, 1.7};
    case AgentKind::kPedestrian:
      return {0.5, 0.5, 1.8};
  }
  return {4.8, 2.0, 1.6};
}

void validate(const Scenario & s)
{
  if (s.dt != kStepSeconds) {
    throw SchemaError("dt", -1, "expected 0.5");
  }
  if (s.num_steps != kNumSteps) {
    throw SchemaError("num_steps", -1, "expected 19");
  }
  if (s.map.size() > static_cast<std::size_t>(kMaxPolylines)) {
    throw SchemaError("map", -1, "more than 256 polylines");
  }
  for (std::size_t i = 0; i < s.map.size(); ++i) {
    const auto & pl = s.map[i];
    if (pl.points.size() < 2) {
      throw SchemaError("map.points", static_cast<int>(i), "polyline needs at least 2 points");
    }
    for (std::size_t k = 0; k < pl.points.size(); ++k) {
      if (!std::isfinite(pl.points[k].x) || !std::isfinite(pl.points[k].y)) {
        throw SchemaError("map.points", static_cast<int>(i), "non-finite coordinate");
      }
      if (k > 0 && pl.points[k] == pl.points[k - 1]) {
        throw SchemaError("map.points", static_cast<int>(i), "repeated consecutive point");
      }
    }
  }
  for (std::size_t i = 0; i < s.traffic_lights.size(); ++i) {
    if (s.traffic_lights[i].states.size() != static_cast<std::size_t>(s.num_steps)) {
      throw SchemaError("traffic_lights.states", static_cast<int>(i), "expected num_steps entries");
    }
  }
  if (s.agents.size() > static_cast<std::size_t>(kMaxAgents)) {
    throw SchemaError("agents", -1, "more than 32 agents");
  }
  int egos = 0;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto & a = s.agents[i];
    const int idx = static_cast<int>(i);
    if (!(a.length > 0.0) || !std::isfinite(a.length)) {
      throw SchemaError("length", idx, "must be positive");
    }
    if (!(a.width > 0.0) || !std::isfinite(a.width)) {
      throw SchemaError("width", idx, "must be positive");
    }
    if (a.states.size() != static_cast<std::size_t>(s.num_steps)) {
      throw SchemaError("states", idx, "expected num_steps entries");
    }
    for (const auto & st : a.states) {
      if (!std::isfinite(st.x) || !std::isfinite(st.y) || !std::isfinite(st.heading)) {
        throw SchemaError("states", idx, "non-finite pose");
      }
      if (!std::isfinite(st.speed) || std::abs(st.speed) > kMaxAbsSpeed) {
        throw SchemaError("speed", idx, "speed must be finite with |speed| <= 60");
      }
      if (st.heading != normalize_angle(st.heading)) {
        throw SchemaError("heading", idx, "heading not normalized to (-pi, pi]");
      }
    }
    if (a.is_ego) ++egos;
  }
  if (egos != 1) {
    throw SchemaError("is_ego", -1, "expected exactly one ego agent, found " + std::to_string(egos));
  }
}

}  // namespace revsim::scenario
