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

#include "revsim/kinematics/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace revsim::kinematics
{

double TokenSpace::accel_of_bin(int i) const
{
  if (i == center_bin()) return 0.0;
  return -a_max + i * accel_step();
}

double TokenSpace::yaw_rate_of_bin(int j) const
{
  if (j == center_bin()) return 0.0;
  return -omega_max + j * yaw_rate_step();
}

void TokenSpace::check() const
{
  if (bins < 3 || bins % 2 == 0) {
    throw std::invalid_argument("token space needs an odd bin count >= 3");
  }
  if (!(a_max > 0.0) || !(omega_max > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("token space bounds and dt must be positive");
  }
}

MotionToken token_from_bins(const TokenSpace & ts, int accel_bin, int yaw_bin)
{
  if (accel_bin < 0 || accel_bin >= ts.bins || yaw_bin < 0 || yaw_bin >= ts.bins) {
    throw std::out_of_range("token bin out of range");
  }
  return {accel_bin * ts.bins + yaw_bin, accel_bin, yaw_bin, ts.accel_of_bin(accel_bin),
          ts.yaw_rate_of_bin(yaw_bin)};
}

MotionToken token_from_id(const TokenSpace & ts, int id)
{
  if (id < 0 || id >= ts.num_tokens()) {
    throw std::out_of_range("token id out of range: " + std::to_string(id));
  }
  return token_from_bins(ts, id / ts.bins, id % ts.bins);
}

int mirror_token_id(const TokenSpace & ts, int id)
{
  const int ia = id / ts.bins;
  const int iw = id % ts.bins;
  return ia * ts.bins + (ts.bins - 1 - iw);
}

AgentState integrate_forward(const AgentState & s, double accel, double yaw_rate, double dt)
{
  AgentState n;
  n.valid = s.valid;
  n.speed = s.speed + accel * dt;
  n.heading = normalize_angle(s.heading + yaw_rate * dt);
  const double mean_speed = 0.5 * (s.speed + n.speed);
  // Midpoint heading taken along the rotation, so it stays exact across the
  // +-pi cut.
  const double mid_heading = s.heading + 0.5 * yaw_rate * dt;
  n.x = s.x + mean_speed * std::cos(mid_heading) * dt;
  n.y = s.y + mean_speed * std::sin(mid_heading) * dt;
  return n;
}

AgentState integrate_reverse(const AgentState & s_next, double accel, double yaw_rate, double dt)
{
  AgentState p;
  p.valid = s_next.valid;
  p.speed = s_next.speed - accel * dt;
  p.heading = normalize_angle(s_next.heading - yaw_rate * dt);
  const double mean_speed = 0.5 * (p.speed + s_next.speed);
  const double mid_heading = p.heading + 0.5 * yaw_rate * dt;
  p.x = s_next.x - mean_speed * std::cos(mid_heading) * dt;
  p.y = s_next.y - mean_speed * std::sin(mid_heading) * dt;
  return p;
}

AgentState step_forward(const AgentState & s, const MotionToken & z, const TokenSpace & ts)
{
  return integrate_forward(s, z.accel, z.yaw_rate, ts.dt);
}

AgentState step_reverse(const AgentState & s_next, const MotionToken & z, const TokenSpace & ts)
{
  return integrate_reverse(s_next, z.accel, z.yaw_rate, ts.dt);
}

AgentState step(const AgentState & s, const MotionToken & z, Direction dir, const TokenSpace & ts)
{
  return dir == Direction::kForward ? step_forward(s, z, ts) : step_reverse(s, z, ts);
}

}  // namespace revsim::kinematics
