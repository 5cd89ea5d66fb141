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

#include "revsim/bmt/autograd.hpp"
#include "revsim/bmt/model.hpp"
#include "revsim/kinematics/dynamics.hpp"
#include "revsim/scenario/preprocess.hpp"

namespace revsim::bmt
{

using kinematics::Direction;
using scenario::AgentState;

struct Pose
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Constant (parameter-independent) encoder inputs for one scene, with the
/// Fourier relation features already expanded.
struct SceneInput
{
  Matrix segments;                  // one row per map segment
  std::vector<int> segment_offsets; // per polyline, CSR into segments
  Matrix lights;                    // one row per traffic light
  std::vector<Pose> poses;          // polylines first, then lights
  EdgeList edges;                   // full pairs
  Matrix relation;                  // per edge
  int num_polylines = 0;
  int num_lights = 0;

  int size() const { return num_polylines + num_lights; }
};

/// Throws CapacityError if the map exceeds the configured polyline limit.
SceneInput build_scene_input(const scenario::CenteredScenario & cs, const BmtModel & model);

/// One embedding row per polyline, then per traffic light. When the model
/// is mirror-symmetric the embedding of the mirrored scene is kept as well.
struct SceneEmbedding
{
  Matrix tokens;
  std::vector<Pose> poses;
  Matrix mirror_tokens;
  std::vector<Pose> mirror_poses;
  int num_polylines = 0;
  int num_lights = 0;

  int size() const { return static_cast<int>(tokens.rows()); }
};

SceneEmbedding encode_scene(const scenario::CenteredScenario & cs, const BmtModel & model);

/// Exact x-axis mirror image of a preprocessed scenario.
scenario::CenteredScenario mirror_centered(const scenario::CenteredScenario & cs);

/// Differentiable scene encoder. Returns size() x hidden_dim.
Var encode_scene(Tape & tape, const SceneInput & in, BmtModel & model);

struct AgentInfo
{
  scenario::AgentKind kind = scenario::AgentKind::kVehicle;
  double length = 4.8;
  double width = 2.0;
  double height = 1.6;
};

/// Token history of every agent in one direction. Row r = agent * T + p,
/// where position p is step p (forward) or step num_steps - 1 - p (reverse)
/// of a full-horizon sample; rollouts use their own anchor as position 0.
struct SequenceSample
{
  Direction dir = Direction::kForward;
  int num_agents = 0;
  int num_positions = 0;
  std::vector<AgentInfo> agents;
  std::vector<int> input_token;   // motion id, or START/PAD
  std::vector<int> target;        // next token, -1 where masked
  std::vector<char> valid;        // state present at this position
  std::vector<AgentState> state;  // pose the input token led to
  std::vector<double> accel;      // controls of the input token (0 for START)
  std::vector<double> yaw_rate;

  int rows() const { return num_agents * num_positions; }
  int row(int agent, int position) const { return agent * num_positions + position; }
  /// Throws ShapeError when the per-row arrays disagree with the sizes.
  void check_shape(int vocab_size) const;
};

/// Image of a sample under y -> -y (yaw rates and token yaw bins flipped).
SequenceSample mirror_sample(const SequenceSample & s, const BmtModel & model);

/// Forward and reverse teacher-forcing samples of a preprocessed scenario.
/// Each agent contributes its longest valid run, tokenized by rollout
/// tokenization so that the inputs are exactly the states a rollout with
/// the correct tokens would produce.
struct TrainingPair
{
  SequenceSample forward;
  SequenceSample reverse;
};
TrainingPair build_training_samples(const scenario::CenteredScenario & cs, const BmtModel & model);

/// Constant decoder inputs (embedding indices, Fourier features, edges).
struct DecoderInput
{
  int rows = 0;
  std::vector<int> motion_index;   // -1 when the input is a special token
  std::vector<int> special_index;  // -1 when the input is a motion token
  std::vector<int> type_index;
  std::vector<int> agent_index;
  std::vector<int> direction_index;
  Matrix shape;                    // rows x 3
  Matrix motion;                   // rows x 2F
  EdgeList a2t, a2a, a2s;
  Matrix rel_a2t, rel_a2a, rel_a2s;
};

DecoderInput build_decoder_input(const SequenceSample & s, const std::vector<Pose> & scene_poses,
                                 const BmtModel & model);

/// Differentiable decoder over one sample. Returns rows x vocab logits,
/// without mirror symmetrization.
Var decode(Tape & tape, const DecoderInput & in, Var scene_tokens, BmtModel & model);

/// A sample with everything needed to evaluate its logits, including the
/// mirrored copy when the model is mirror-symmetric.
struct PreparedSample
{
  SequenceSample sample;
  DecoderInput input;
  DecoderInput mirror_input;
};

PreparedSample prepare_sample(SequenceSample s, const SceneInput & scene,
                              const SceneInput * mirror_scene, const BmtModel & model);

/// Symmetrized logits: 0.5 * (f(x) + P f(Mx)) for mirror-symmetric models.
Var forward_logits(Tape & tape, const PreparedSample & ps, Var scene, Var mirror_scene,
                   BmtModel & model);

/// Inference: logits of every row, rows x vocab.
Matrix forward_logits(const SequenceSample & s, const SceneEmbedding & scene,
                      const BmtModel & model);

/// Next-token logits at the last position, num_agents x vocab.
Matrix decode_step(const SequenceSample & history, const SceneEmbedding & scene,
                   const BmtModel & model);

}  // namespace revsim::bmt
