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

#include "revsim/kinematics/dynamics.hpp"

namespace revsim::kinematics
{

struct Footprint
{
  double length = 4.8;
  double width = 2.0;
};

struct TokenMatch
{
  MotionToken token;
  double contour_error = 0.0;  // meters
};

/// Exhaustive search over every token for the one whose simulated footprint
/// (stepped forward from s_from, or reversed for Direction::kReverse) best
/// matches s_to by mean corner distance. Ties go to the smallest id.
TokenMatch tokenize_pair(const AgentState & s_from, const AgentState & s_to, Footprint shape,
                         Direction dir, const TokenSpace & ts);

struct TokenizedTrack
{
  /// In generation order: forward is s0->s1, ...; reverse is sT->sT-1, ...
  std::vector<MotionToken> tokens;
  std::vector<double> contour_errors;
  /// Reconstructed states in chronological order, one per covered step.
  std::vector<AgentState> reconstructed;
};

/// Rollout tokenization of states[first..last] (inclusive). Each pair is
/// matched from the previously reconstructed state, not the recorded one.
/// Throws InvalidStateError if a covered state is invalid.
TokenizedTrack tokenize_states(const std::vector<AgentState> & states, int first, int last,
                               Footprint shape, Direction dir, const TokenSpace & ts);

/// Whole-track version of tokenize_states.
TokenizedTrack tokenize_track(const scenario::AgentTrack & track, Direction dir,
                              const TokenSpace & ts);

/// Replays tokens from the anchor. Returns tokens.size() + 1 states in
/// chronological order (for kReverse the anchor is the last element).
std::vector<AgentState> detokenize_track(const AgentState & anchor,
                                         const std::vector<MotionToken> & tokens, Direction dir,
                                         const TokenSpace & ts);

/// Longest run of consecutive valid states, as [first, last]; {-1, -1} if none.
std::pair<int, int> longest_valid_run(const std::vector<AgentState> & states);

}  // namespace revsim::kinematics
