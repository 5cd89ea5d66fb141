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

#include <Eigen/Core>

#include "revsim/bmt/model.hpp"
#include "revsim/bmt/network.hpp"
#include "revsim/common/rng.hpp"

namespace revsim::bmt
{

/// Nucleus sampling over one logits row. The last vocabulary entry (PAD)
/// and any id in `banned` are never returned. Temperature divides the
/// logits; the candidate set is the shortest probability-sorted prefix
/// (ties by id) whose mass reaches top_p, at least one token. top_p <= 0
/// degenerates to argmax without consuming randomness.
int sample_tokens(const Eigen::Ref<const Eigen::RowVectorXd> & logits, double top_p,
                  double temperature, Rng & rng, const std::vector<int> & banned = {});

struct RolloutAgent
{
  AgentInfo info;
  AgentState anchor;  // anchor.valid = false keeps the agent absent throughout
  bool forced = false;
  /// Tokens emitted in order when forced; the agent drops out (invalid)
  /// once they run out.
  std::vector<int> forced_tokens;
};

struct RolloutOptions
{
  double top_p = 0.95;
  double temperature = 1.0;

  static RolloutOptions from(const BmtConfig & cfg) { return {cfg.top_p, cfg.temperature}; }
  static RolloutOptions greedy() { return {0.0, 1.0}; }
};

struct RolloutResult
{
  /// Per agent, steps + 1 states in chronological order (the anchor is
  /// first for forward rollouts, last for reverse ones).
  std::vector<std::vector<AgentState>> states;
  /// Per agent, the emitted token ids in generation order, -1 where the
  /// agent was absent.
  std::vector<std::vector<int>> tokens;
};

/// Autoregressive generation: decode_step, sample (START/END/PAD masked),
/// advance with the exact dynamics, repeat. Forced agents emit their given
/// tokens but still take part in attention. Throws ShapeError when steps
/// exceeds the horizon.
RolloutResult rollout(const std::vector<RolloutAgent> & agents, Direction dir, int steps,
                      const SceneEmbedding & scene, const BmtModel & model, Rng & rng,
                      const RolloutOptions & opt);

}  // namespace revsim::bmt
