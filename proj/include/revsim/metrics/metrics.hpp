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

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "revsim/metrics/geometry.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::metrics
{

struct CollisionReport
{
  /// Overlapping agent index pairs (i < j), one list per step.
  std::vector<std::vector<std::pair<int, int>>> pairs_per_step;
  /// True if the agent overlaps another valid agent at some step.
  std::vector<bool> involved;
  /// Fraction of agents involved in at least one overlap (0 with no agents).
  double agent_collision_rate = 0.0;

  bool pair_collides(int i, int j) const;
  /// First step where (i, j) overlap, or -1.
  int first_collision_step(int i, int j) const;
};

CollisionReport check_collisions(const scenario::Scenario & s);

/// Constant-velocity time to collision of agent_i against every other valid
/// agent, each treated as a disc of radius half its box diagonal. Minimum
/// positive contact time capped at 10 s; 0 if already in contact; nullopt if
/// no agent approaches or agent_i is invalid at step.
std::optional<double> ttc(const scenario::Scenario & s, int agent_i, int step);

/// Disc-pair version used by ttc().
std::optional<double> disc_ttc(double px, double py, double vx, double vy, double radius_sum);

constexpr double kTtcCap = 10.0;

class AlignmentError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Point
{
  double x = 0.0;
  double y = 0.0;
  bool valid = true;
};
/// One agent's positions over the horizon.
using Trajectory = std::vector<Point>;
/// All agents of one prediction mode.
using ModeTrajectories = std::vector<Trajectory>;

struct DisplacementMetrics
{
  double sfde_avg = 0.0;
  double sfde_min = 0.0;
  double sade_avg = 0.0;
  double sade_min = 0.0;
  std::vector<double> sfde_per_mode;
  std::vector<double> sade_per_mode;
};

/// Per mode: SFDE = mean over agents of the error at the last step valid in
/// both; SADE = mean over all valid (agent, step) pairs. Throws AlignmentError
/// when agent counts or horizons differ, or no modes are given.
DisplacementMetrics displacement_metrics(const std::vector<ModeTrajectories> & preds,
                                         const ModeTrajectories & gt);

struct DiversityMetrics
{
  double fdd = 0.0;
  double sdd = 0.0;
  double add = 0.0;
};

/// Spread at a step = mean pairwise distance among the modes' positions.
/// FDD/SDD use the final/first step, ADD the mean over steps; each averaged
/// over agents. Zeros for fewer than two modes.
DiversityMetrics diversity_metrics(const std::vector<ModeTrajectories> & preds);

Trajectory positions_of(const scenario::AgentTrack & t);

}  // namespace revsim::metrics
