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

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "revsim/common/rng.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::test
{

using scenario::AgentState;
using scenario::AgentTrack;
using scenario::Scenario;

/// Constant-velocity track along `heading` starting at (x0, y0).
inline AgentTrack straight_track(const std::string & id, double x0, double y0, double heading,
                                 double speed, bool is_ego = false)
{
  AgentTrack t;
  t.id = id;
  t.is_ego = is_ego;
  for (int k = 0; k < scenario::kNumSteps; ++k) {
    const double d = speed * scenario::kStepSeconds * k;
    t.states.push_back({x0 + d * std::cos(heading), y0 + d * std::sin(heading), heading, speed, true});
  }
  return t;
}

/// Ego driving east at 10 m/s on a single straight lane, plus one follower.
inline Scenario simple_scenario()
{
  Scenario s;
  s.scenario_id = "simple";
  s.map.push_back({scenario::PolylineKind::kLane, {{-20.0, 0.0}, {60.0, 0.0}, {200.0, 0.0}}});
  s.map.push_back({scenario::PolylineKind::kRoadEdge, {{-20.0, -2.0}, {200.0, -2.0}}});
  s.map.push_back({scenario::PolylineKind::kRoadEdge, {{-20.0, 5.5}, {200.0, 5.5}}});
  s.agents.push_back(straight_track("ego", 0.0, 0.0, 0.0, 10.0, true));
  s.agents.push_back(straight_track("car", 0.0, 3.5, 0.0, 8.0));
  return s;
}

/// Random valid state with moderate speed.
inline AgentState random_state(std::mt19937_64 & gen)
{
  std::uniform_real_distribution<double> pos(-100.0, 100.0);
  std::uniform_real_distribution<double> ang(-3.14159, 3.14159);
  std::uniform_real_distribution<double> spd(-5.0, 30.0);
  return {pos(gen), pos(gen), ang(gen), spd(gen), true};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string & name)
{
  const auto p = std::filesystem::temp_directory_path() / ("revsim_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace revsim::test
