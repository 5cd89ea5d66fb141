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

#include "revsim/scenario/types.hpp"

namespace revsim::metrics
{

/// Closed 2D rectangle. `heading` orients the length axis.
struct OrientedBox
{
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;
  double length = 1.0;
  double width = 1.0;

  std::array<scenario::Point2, 4> corners() const;
};

OrientedBox box_of(const scenario::AgentState & s, double length, double width);
OrientedBox box_of(const scenario::AgentTrack & t, int step);

/// Separating-axis gap: the largest over the four box axes of
/// |center offset projected| - (sum of projected half extents). Positive means
/// separated by at least that much, zero means touching, negative means
/// overlapping with that penetration along the shallowest axis.
double box_separation(const OrientedBox & a, const OrientedBox & b);

/// Shared boundary counts as overlap.
bool box_overlap(const OrientedBox & a, const OrientedBox & b);

/// Mean distance between the four corresponding corners of two footprints
/// with identical extents.
double contour_error(const scenario::AgentState & a, const scenario::AgentState & b, double length,
                     double width);

}  // namespace revsim::metrics
