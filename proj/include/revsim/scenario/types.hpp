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

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace revsim::scenario
{

constexpr double kStepSeconds = 0.5;
constexpr int kNumSteps = 19;
constexpr int kMaxAgents = 32;
constexpr int kMaxPolylines = 256;
constexpr double kMaxAbsSpeed = 60.0;

/// Pose and scalar speed of one agent at one step.
struct AgentState
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // signed, along heading
  bool valid = true;

  bool operator==(const AgentState &) const = default;
};

enum class AgentKind { kVehicle, kPedestrian, kCyclist };

struct AgentTrack
{
  std::string id;
  AgentKind kind = AgentKind::kVehicle;
  double length = 4.8;
  double width = 2.0;
  double height = 1.6;
  std::vector<AgentState> states;
  bool is_ego = false;

  bool operator==(const AgentTrack &) const = default;
};

enum class PolylineKind { kLane, kRoadEdge, kBrokenLine, kYellowLine, kCrosswalk, kStopSign };

struct Point2
{
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2 &) const = default;
};

struct MapPolyline
{
  PolylineKind kind = PolylineKind::kLane;
  std::vector<Point2> points;
  bool operator==(const MapPolyline &) const = default;
};

enum class LightState { kRed, kYellow, kGreen, kUnknown };

struct TrafficLight
{
  Point2 position;
  std::vector<LightState> states;
  bool operator==(const TrafficLight &) const = default;
};

struct Scenario
{
  std::string scenario_id;
  double dt = kStepSeconds;
  int num_steps = kNumSteps;
  std::vector<MapPolyline> map;
  std::vector<TrafficLight> traffic_lights;
  std::vector<AgentTrack> agents;

  bool operator==(const Scenario &) const = default;

  /// Index of the ego track, or -1 if none.
  int ego_index() const;
};

std::string_view to_string(AgentKind kind);
std::string_view to_string(PolylineKind kind);
std::string_view to_string(LightState state);
std::optional<AgentKind> agent_kind_from_string(std::string_view s);
std::optional<PolylineKind> polyline_kind_from_string(std::string_view s);
std::optional<LightState> light_state_from_string(std::string_view s);

/// Default footprint for a kind: {length, width, height}.
std::array<double, 3> default_shape(AgentKind kind);

/// Throws SchemaError naming the first violated invariant.
void validate(const Scenario & s);

}  // namespace revsim::scenario
