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

#include <cstdint>
#include <vector>

#include "revsim/common/rng.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::scenario
{

struct SynthOptions
{
  int min_agents = 2;
  int max_agents = 8;
  int min_lanes = 2;
  int max_lanes = 4;
  double lane_width = 3.5;
  double road_length = 320.0;
  double curved_prob = 0.5;
  double lane_change_prob = 0.3;
  double cyclist_prob = 0.1;
  double crosswalk_prob = 0.3;
  int max_attempts = 1000;
};

/// Deterministic desk-scale substitute for recorded driving logs: a straight
/// or curved multi-lane road with rule-driven traffic (pure-pursuit lane
/// keeping, IDM speed control, occasional lane changes). Trajectories are
/// integrated with the same midpoint dynamics the token space uses, under
/// continuous controls inside the token bounds. Layouts that produce any box
/// overlap are resampled; GenerationError after max_attempts failures.
std::vector<Scenario> synth_scenarios(int count, std::uint64_t seed,
                                      const SynthOptions & options = {});

/// One scenario from an explicit stream.
Scenario synth_scenario(Rng & rng, const std::string & scenario_id,
                        const SynthOptions & options = {});

}  // namespace revsim::scenario
