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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "revsim/bmt/model.hpp"
#include "revsim/bmt/rollout.hpp"
#include "revsim/common/rng.hpp"
#include "revsim/metrics/geometry.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::adversary
{

using scenario::AgentKind;
using scenario::Point2;

constexpr int kMinCollisionStep = 2;
constexpr double kContactPenetration = 0.05;  // m
constexpr double kSpeedOffsetLo = -2.0;       // m/s
constexpr double kSpeedOffsetHi = 6.0;
constexpr double kMinAdvSpeed = 0.5;
constexpr double kMaxAdvSpeed = 30.0;
constexpr double kMinPathLength = 5.0;        // m
constexpr double kMinMeanSpeed = 1.0;         // m/s
constexpr double kMaxCurvature = 0.8;         // rad/m
constexpr double kMinArcStep = 1e-6;          // m

/// Collision state of the inserted adversary at step t_c.
struct CollisionSpec
{
  int t_c = kMinCollisionStep;
  double adv_heading = 0.0;  // rad, as sampled in [0, 2 pi)
  double adv_speed = 0.0;
  Point2 adv_position;
  double adv_length = 4.8;
  double adv_width = 2.0;
  double adv_height = 1.6;
  AgentKind adv_kind = AgentKind::kVehicle;
};

/// Fields fixed by the caller instead of sampled. Shape defaults to the
/// kind's footprint unless given.
struct CollisionOverrides
{
  std::optional<int> t_c;
  std::optional<double> adv_heading;
  std::optional<double> adv_speed;
  std::optional<AgentKind> adv_kind;
  std::optional<double> adv_length;
  std::optional<double> adv_width;
};

enum class GenerationMode { kReplay, kClosedLoopReverse, kForwardRefine };

std::string_view to_string(GenerationMode m);
std::optional<GenerationMode> generation_mode_from_string(std::string_view s);

enum class RejectionReason { kTooShort, kTooSlow, kCurvature, kEarlyCollision };

std::string_view to_string(RejectionReason r);

/// Quantities the rejection rules look at.
struct FilterStats
{
  double path_length = 0.0;
  double mean_speed = 0.0;
  double max_curvature = 0.0;
  int first_overlap_step = -1;  // ADV vs ego
};

struct AdvResult
{
  scenario::Scenario scenario;  // ADV appended as the last agent
  CollisionSpec spec;
  GenerationMode mode = GenerationMode::kReplay;
  bool accepted = false;
  std::optional<RejectionReason> rejection_reason;
  std::uint64_t seed = 0;
  FilterStats stats;

  const scenario::AgentTrack & adv() const { return scenario.agents.back(); }
};

/// ADV footprint {length, width, height} per kind.
std::array<double, 3> adv_shape(AgentKind kind);

/// ADV center that puts a box of the given heading and extents in contact
/// with `ego`, displaced from the ego center opposite to the heading, with
/// the given penetration depth.
Point2 contact_position(const metrics::OrientedBox & ego, double adv_heading, double adv_length,
                        double adv_width, double penetration = kContactPenetration);

/// Draws t_c among the steps in [2, num_steps - 1] where the ego is valid,
/// a global heading in [0, 2 pi), speed = ego speed + U[-2, 6] clamped to
/// [0.5, 30], then places the ADV by contact construction.
/// Throws std::invalid_argument if the ego is never valid in that range.
CollisionSpec sample_collision(const scenario::Scenario & s, Rng & rng,
                               const CollisionOverrides & overrides = {});

/// Reconstructs the ADV history before t_c by reverse rollout (see
/// GenerationMode) and appends it. The result is unfiltered.
AdvResult build_adversary(const scenario::Scenario & s, const CollisionSpec & spec,
                          GenerationMode mode, const bmt::BmtModel & model, Rng & rng,
                          const bmt::RolloutOptions & opt);

FilterStats adversary_stats(const scenario::Scenario & augmented, int t_c);

/// Sets accepted / rejection_reason (and stats); trajectories are untouched.
AdvResult filter_adversary(AdvResult r);

/// num_modes filtered candidates. Each slot resamples (new spec and
/// rollout) up to max_resamples times; a slot that never passes keeps its
/// best rejected candidate, ranked by how late its rejection rule comes.
std::vector<AdvResult> generate_batch(const scenario::Scenario & s, int num_modes,
                                      GenerationMode mode, const bmt::BmtModel & model,
                                      const bmt::RolloutOptions & opt, Rng & rng,
                                      int max_resamples);

/// {"spec", "mode", "accepted", "rejection_reason", "seed", "adv_id"}.
nlohmann::ordered_json sidecar_json(const AdvResult & r);

}  // namespace revsim::adversary
