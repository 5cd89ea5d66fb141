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

#include "revsim/kinematics/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "revsim/common/errors.hpp"

namespace revsim::kinematics
{
namespace
{

struct Corners
{
  std::array<double, 4> x;
  std::array<double, 4> y;
};

Corners corners_of(const AgentState & s, const std::array<std::array<double, 2>, 4> & local)
{
  const double c = std::cos(s.heading);
  const double sn = std::sin(s.heading);
  Corners out;
  for (int k = 0; k < 4; ++k) {
    out.x[k] = s.x + c * local[k][0] - sn * local[k][1];
    out.y[k] = s.y + sn * local[k][0] + c * local[k][1];
  }
  return out;
}

}  // namespace

TokenMatch tokenize_pair(const AgentState & s_from, const AgentState & s_to, Footprint shape,
                         Direction dir, const TokenSpace & ts)
{
  const double hl = 0.5 * shape.length;
  const double hw = 0.5 * shape.width;
  const std::array<std::array<double, 2>, 4> local{{{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}}};
  const Corners target = corners_of(s_to, local);

  TokenMatch best;
  best.contour_error = std::numeric_limits<double>::infinity();
  for (int ia = 0; ia < ts.bins; ++ia) {
    for (int iw = 0; iw < ts.bins; ++iw) {
      const MotionToken z = token_from_bins(ts, ia, iw);
      const AgentState cand = step(s_from, z, dir, ts);
      const Corners cc = corners_of(cand, local);
      double err = 0.0;
      for (int k = 0; k < 4; ++k) {
        err += std::hypot(cc.x[k] - target.x[k], cc.y[k] - target.y[k]);
      }
      err *= 0.25;
      if (err < best.contour_error) {
        best.contour_error = err;
        best.token = z;
      }
    }
  }
  return best;
}

TokenizedTrack tokenize_states(const std::vector<AgentState> & states, int first, int last,
                               Footprint shape, Direction dir, const TokenSpace & ts)
{
  if (first < 0 || last >= static_cast<int>(states.size()) || first > last) {
    throw std::out_of_range("tokenize_states: bad range");
  }
  for (int t = first; t <= last; ++t) {
    if (!states[t].valid) {
      throw InvalidStateError(t);
    }
  }
  TokenizedTrack out;
  const int n = last - first + 1;
  out.reconstructed.resize(n);
  if (dir == Direction::kForward) {
    AgentState anchor = states[first];
    out.reconstructed[0] = anchor;
    for (int t = first; t < last; ++t) {
      const TokenMatch m = tokenize_pair(anchor, states[t + 1], shape, dir, ts);
      anchor = step_forward(anchor, m.token, ts);
      out.tokens.push_back(m.token);
      out.contour_errors.push_back(m.contour_error);
      out.reconstructed[t + 1 - first] = anchor;
    }
  } else {
    AgentState anchor = states[last];
    out.reconstructed[n - 1] = anchor;
    for (int t = last; t > first; --t) {
      const TokenMatch m = tokenize_pair(anchor, states[t - 1], shape, dir, ts);
      anchor = step_reverse(anchor, m.token, ts);
      out.tokens.push_back(m.token);
      out.contour_errors.push_back(m.contour_error);
      out.reconstructed[t - 1 - first] = anchor;
    }
  }
  return out;
}

TokenizedTrack tokenize_track(const scenario::AgentTrack & track, Direction dir,
                              const TokenSpace & ts)
{
  return tokenize_states(track.states, 0, static_cast<int>(track.states.size()) - 1,
                         {track.length, track.width}, dir, ts);
}

std::vector<AgentState> detokenize_track(const AgentState & anchor,
                                         const std::vector<MotionToken> & tokens, Direction dir,
                                         const TokenSpace & ts)
{
  std::vector<AgentState> out;
  out.reserve(tokens.size() + 1);
  out.push_back(anchor);
  for (const auto & z : tokens) {
    out.push_back(step(out.back(), z, dir, ts));
  }
  if (dir == Direction::kReverse) {
    std::reverse(out.begin(), out.end());
  }
  return out;
}

std::pair<int, int> longest_valid_run(const std::vector<AgentState> & states)
{
  int best_first = -1;
  int best_len = 0;
  int start = -1;
  for (int t = 0; t <= static_cast<int>(states.size()); ++t) {
    const bool ok = t < static_cast<int>(states.size()) && states[t].valid;
    if (ok && start < 0) start = t;
    if (!ok && start >= 0) {
      if (t - start > best_len) {
        best_len = t - start;
        best_first = start;
      }
      start = -1;
    }
  }
  if (best_first < 0) return {-1, -1};
  return {best_first, best_first + best_len - 1};
}

}  // namespace revsim::kinematics
