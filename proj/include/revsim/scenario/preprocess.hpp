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
#include <vector>

#include "revsim/scenario/types.hpp"

namespace revsim::scenario
{

constexpr int kStateFeatureDim = 16;
using StateFeature = std::array<double, kStateFeatureDim>;

/// One vectorized map segment in the centered frame.
struct SegmentFeature
{
  Point2 start;
  Point2 end;
  double dir_x = 0.0;  // unit direction
  double dir_y = 0.0;
  double heading = 0.0;
  double length = 0.0;
};

/// Scenario translated so the map-bounds center is the origin, with the ego
/// at index 0 and the other tracks ordered by distance to the ego at step 0.
struct CenteredScenario
{
  Scenario scenario;
  Point2 center;
  /// Original agent index for each reordered slot.
  std::vector<int> source_index;
  /// Per polyline, one entry per segment.
  std::vector<std::vector<SegmentFeature>> segments;
  /// Row agent * num_steps + step. Layout: x, y, sin(heading), cos(heading),
  /// speed, length, width, height, one-hot kind (vehicle, pedestrian,
  /// cyclist), valid, is_ego, 3 padding zeros.
  std::vector<StateFeature> state_features;

  const StateFeature & feature(int agent, int step) const
  {
    return state_features[static_cast<std::size_t>(agent) * scenario.num_steps + step];
  }
};

/// Center of the axis-aligned bounds of all map points (agent positions if
/// the map is empty).
Point2 map_center(const Scenario & s);

CenteredScenario preprocess(const Scenario & s);

/// Mirror image about the x axis (y -> -y, heading -> -heading).
Scenario mirror_y(const Scenario & s);

}  // namespace revsim::scenario
