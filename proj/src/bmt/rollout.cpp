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

#include "revsim/bmt/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "revsim/common/errors.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::bmt
{

int sample_tokens(const Eigen::Ref<const Eigen::RowVectorXd> & logits, double top_p,
                  double temperature, Rng & rng, const std::vector<int> & banned)
{
  const int vocab = static_cast<int>(logits.size());
  if (vocab < 2) throw ShapeError("sample_tokens: vocabulary too small");
  std::vector<char> allowed(static_cast<std::size_t>(vocab), 1);
  allowed[vocab - 1] = 0;
  for (int b : banned) {
    if (b >= 0 && b < vocab) allowed[b] = 0;
  }
  const double inv_t = 1.0 / temperature;
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < vocab; ++j) {
    if (allowed[j]) mx = std::max(mx, logits[j] * inv_t);
  }
  std::vector<double> prob(static_cast<std::size_t>(vocab), 0.0);
  double z = 0.0;
  for (int j = 0; j < vocab; ++j) {
    if (!allowed[j]) continue;
    prob[j] = std::exp(logits[j] * inv_t - mx);
    z += prob[j];
  }
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(vocab));
  for (int j = 0; j < vocab; ++j) {
    if (allowed[j]) order.push_back(j);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return prob[a] > prob[b]; });
  if (top_p <= 0.0) return order.front();

  std::size_t keep = 0;
  double mass = 0.0;
  while (keep < order.size()) {
    mass += prob[order[keep]] / z;
    ++keep;
    if (mass >= top_p) break;
  }
  double kept = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept += prob[order[i]];
  const double u = rng.uniform() * kept;
  double acc = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    acc += prob[order[i]];
    if (u < acc) return order[i];
  }
  return order[keep - 1];
}

RolloutResult rollout(const std::vector<RolloutAgent> & agents, Direction dir, int steps,
                      const SceneEmbedding & scene, const BmtModel & model, Rng & rng,
                      const RolloutOptions & opt)
{
  const BmtConfig & cfg = model.config();
  const kinematics::TokenSpace ts = cfg.token_space();
  if (steps < 0 || steps > scenario::kNumSteps - 1) {
    throw ShapeError("rollout: steps must be in [0, " + std::to_string(scenario::kNumSteps - 1) + "]");
  }
  const int n = static_cast<int>(agents.size());
  // Generation-order histories.
  std::vector<std::vector<AgentState>> states(n);
  std::vector<std::vector<int>> tokens(n);
  for (int i = 0; i < n; ++i) {
    if (agents[i].forced) {
      for (int t : agents[i].forced_tokens) {
        if (t < 0 || t >= ts.num_tokens()) throw ShapeError("forced token outside the motion vocabulary");
      }
    }
    states[i].push_back(agents[i].anchor);
  }
  const std::vector<int> banned{cfg.start_token(), cfg.end_token()};
  const AgentState absent{0.0, 0.0, 0.0, 0.0, false};

  for (int k = 0; k < steps; ++k) {
    bool need_logits = false;
    for (int i = 0; i < n; ++i) {
      need_logits = need_logits || (states[i][k].valid && !agents[i].forced);
    }
    Matrix logits;
    if (need_logits) {
      SequenceSample h;
      h.dir = dir;
      h.num_agents = n;
      h.num_positions = k + 1;
      const std::size_t rows = static_cast<std::size_t>(n) * (k + 1);
      h.input_token.assign(rows, cfg.pad_token());
      h.target.assign(rows, -1);
      h.valid.assign(rows, 0);
      h.state.assign(rows, absent);
      h.accel.assign(rows, 0.0);
      h.yaw_rate.assign(rows, 0.0);
      for (int i = 0; i < n; ++i) {
        h.agents.push_back(agents[i].info);
        for (int p = 0; p <= k; ++p) {
          const int r = h.row(i, p);
          if (!states[i][p].valid) continue;
          h.valid[r] = 1;
          h.state[r] = states[i][p];
          if (p == 0 || tokens[i][p - 1] < 0) {
            h.input_token[r] = cfg.start_token();
          } else {
            const kinematics::MotionToken z = kinematics::token_from_id(ts, tokens[i][p - 1]);
            h.input_token[r] = z.id;
            h.accel[r] = z.accel;
            h.yaw_rate[r] = z.yaw_rate;
          }
        }
      }
      logits = decode_step(h, scene, model);
    }
    for (int i = 0; i < n; ++i) {
      const AgentState & cur = states[i][k];
      int tok = -1;
      if (cur.valid) {
        if (agents[i].forced) {
          if (k < static_cast<int>(agents[i].forced_tokens.size())) tok = agents[i].forced_tokens[k];
        } else {
          // Tokens that would push |speed| past the scenario bound are masked.
          std::vector<int> agent_banned = banned;
          for (int ia = 0; ia < ts.bins; ++ia) {
            const double a = ts.accel_of_bin(ia);
            const double v = dir == Direction::kForward ? cur.speed + a * ts.dt : cur.speed - a * ts.dt;
            if (std::abs(v) <= scenario::kMaxAbsSpeed) continue;
            for (int iw = 0; iw < ts.bins; ++iw) agent_banned.push_back(ia * ts.bins + iw);
          }
          tok = sample_tokens(logits.row(i), opt.top_p, opt.temperature, rng, agent_banned);
        }
      }
      tokens[i].push_back(tok);
      states[i].push_back(tok >= 0 ? kinematics::step(cur, kinematics::token_from_id(ts, tok), dir, ts)
                                   : absent);
    }
  }

  RolloutResult out;
  out.tokens = std::move(tokens);
  out.states = std::move(states);
  if (dir == Direction::kReverse) {
    for (auto & s : out.states) std::reverse(s.begin(), s.end());
  }
  return out;
}

}  // namespace revsim::bmt
