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
#include <numbers>

namespace revsim
{

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double angle)
{
  double r = std::remainder(angle, kTwoPi);
  if (r <= -kPi) {
    r += kTwoPi;
  }
  return r;
}

/// Signed smallest difference to - from, in (-pi, pi].
inline double angle_diff(double to, double from) { return normalize_angle(to - from); }

}  // namespace revsim
