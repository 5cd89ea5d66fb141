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

#include <vector>

#include "revsim/common/angle.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::kinematics
{

using scenario::AgentState;

/// Uniform (acceleration, yaw-rate) grid. Bin centers include both endpoints,
/// so with odd K the zero control is an exact bin center.
struct TokenSpace
{
  double a_max = 10.0;        // m/s^2
  double omega_max = kPi / 2; // rad/s
  int bins = 33;              // per axis, odd
  double dt = 0.5;            // s

  int num_tokens() const { return bins * bins; }
  int center_bin() const { return (bins - 1) / 2; }
  double accel_of_bin(int i) const;
  double yaw_rate_of_bin(int j) const;
  double accel_step() const { return 2.0 * a_max / (bins - 1); }
  double yaw_rate_step() const { return 2.0 * omega_max / (bins - 1); }

  /// Throws std::invalid_argument unless bins is odd and >= 3 and the
  /// bounds are positive.
  void check() const;

  bool operator==(const TokenSpace &) const = default;
};

struct MotionToken
{
  int id = 0;
  int accel_bin = 0;
  int yaw_bin = 0;
  double accel = 0.0;
  double yaw_rate = 0.0;
};

MotionToken token_from_id(const TokenSpace & ts, int id);
MotionToken token_from_bins(const TokenSpace & ts, int accel_bin, int yaw_bin);
/// Token whose yaw-rate bin is mirrored (omega -> -omega).
int mirror_token_id(const TokenSpace & ts, int id);

enum class Direction { kForward, kReverse };

/// Midpoint integration of one step under continuous controls.
AgentState integrate_forward(const AgentState & s, double accel, double yaw_rate, double dt);
/// Exact inverse of integrate_forward.
AgentState integrate_reverse(const AgentState & s_next, double accel, double yaw_rate, double dt);

AgentState step_forward(const AgentState & s, const MotionToken & z, const TokenSpace & ts);
AgentState step_reverse(const AgentState & s_next, const MotionToken & z, const TokenSpace & ts);
AgentState step(const AgentState & s, const MotionToken & z, Direction dir, const TokenSpace & ts);

}  // namespace revsim::kinematics
