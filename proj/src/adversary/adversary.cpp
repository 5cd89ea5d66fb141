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

#include "revsim/adversary/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "revsim/bmt/network.hpp"
#include "revsim/common/angle.hpp"
#include "revsim/kinematics/tokenizer.hpp"
#include "revsim/scenario/preprocess.hpp"

namespace revsim::adversary
{

using kinematics::Direction;
using scenario::AgentState;
using scenario::AgentTrack;
using scenario::Scenario;

std::string_view to_string(GenerationMode m)
{
  switch (m) {
    case GenerationMode::kReplay: return "replay";
    case GenerationMode::kClosedLoopReverse: return "closed_loop_reverse";
    case GenerationMode::kForwardRefine: return "forward_refine";
  }
  return "replay";
}

std::optional<GenerationMode> generation_mode_from_string(std::string_view s)
{
  if (s == "replay") return GenerationMode::kReplay;
  if (s == "closed_loop_reverse") return GenerationMode::kClosedLoopReverse;
  if (s == "forward_refine") return GenerationMode::kForwardRefine;
  return std::nullopt;
}

std::string_view to_string(RejectionReason r)
{
  switch (r) {
    case RejectionReason::kTooShort: return "too_short";
    case RejectionReason::kTooSlow: return "too_slow";
    case RejectionReason::kCurvature: return "curvature";
    case RejectionReason::kEarlyCollision: return "early_collision";
  }
  return "too_short";
}

std::array<double, 3> adv_shape(AgentKind kind)
{
  switch (kind) {
    case AgentKind::kVehicle: return {4.8, 2.0, 1.6};
    case AgentKind::kCyclist: return {1.8, 0.6, 1.7};
    case AgentKind::kPedestrian: return {0.5, 0.5, 1.8};
  }
  return {4.8, 2.0, 1.6};
}

Point2 contact_position(const metrics::OrientedBox & ego, double adv_heading, double adv_length,
                        double adv_width, double penetration)
{
  const double ux = -std::cos(adv_heading);
  const double uy = -std::sin(adv_heading);
  const double ce = std::cos(ego.heading);
  const double se = std::sin(ego.heading);
  const double ca = std::cos(adv_heading);
  const double sa = std::sin(adv_heading);
  // Candidate separating axes: both boxes' length and width directions.
  const double axes[4][2] = {{ce, se}, {-se, ce}, {ca, sa}, {-sa, ca}};
  double d = std::numeric_limits<double>::infinity();
  for (const auto & n : axes) {
    const double un = std::abs(ux * n[0] + uy * n[1]);
    if (un < 1e-12) continue;
    const double r_ego = 0.5 * ego.length * std::abs(ce * n[0] + se * n[1]) +
                         0.5 * ego.width * std::abs(-se * n[0] + ce * n[1]);
    const double r_adv = 0.5 * adv_length * std::abs(ca * n[0] + sa * n[1]) +
                         0.5 * adv_width * std::abs(-sa * n[0] + ca * n[1]);
    d = std::min(d, (r_ego + r_adv - penetration) / un);
  }
  return {ego.cx + d * ux, ego.cy + d * uy};
}

CollisionSpec sample_collision(const Scenario & s, Rng & rng, const CollisionOverrides & ov)
{
  const int ego = s.ego_index();
  if (ego < 0) throw std::invalid_argument("sample_collision: scenario has no ego");
  const AgentTrack & et = s.agents[ego];
  std::vector<int> steps;
  for (int t = kMinCollisionStep; t < s.num_steps; ++t) {
    if (et.states[t].valid) steps.push_back(t);
  }
  if (steps.empty()) throw std::invalid_argument("sample_collision: ego never valid after step 2");

  CollisionSpec spec;
  const int pick = rng.uniform_int(0, static_cast<int>(steps.size()) - 1);
  const double heading = rng.uniform(0.0, kTwoPi);
  const double offset = rng.uniform(kSpeedOffsetLo, kSpeedOffsetHi);

  spec.t_c = ov.t_c.value_or(steps[pick]);
  if (spec.t_c < kMinCollisionStep || spec.t_c >= s.num_steps || !et.states[spec.t_c].valid) {
    throw std::invalid_argument("sample_collision: ego not valid at the requested t_c");
  }
  const AgentState & es = et.states[spec.t_c];
  spec.adv_heading = ov.adv_heading.value_or(heading);
  spec.adv_speed = ov.adv_speed.value_or(std::clamp(es.speed + offset, kMinAdvSpeed, kMaxAdvSpeed));
  spec.adv_kind = ov.adv_kind.value_or(AgentKind::kVehicle);
  const auto shape = adv_shape(spec.adv_kind);
  spec.adv_length = ov.adv_length.value_or(shape[0]);
  spec.adv_width = ov.adv_width.value_or(shape[1]);
  spec.adv_height = shape[2];
  spec.adv_position = contact_position(metrics::box_of(es, et.length, et.width), spec.adv_heading,
                                       spec.adv_length, spec.adv_width);
  return spec;
}

namespace
{

/// First step of the valid run that ends at t, or -1 if t is invalid.
int run_start(const std::vector<AgentState> & states, int t)
{
  if (!states[t].valid) return -1;
  int f = t;
  while (f > 0 && states[f - 1].valid) --f;
  return f;
}

int run_end(const std::vector<AgentState> & states, int t)
{
  if (!states[t].valid) return -1;
  int l = t;
  while (l + 1 < static_cast<int>(states.size()) && states[l + 1].valid) ++l;
  return l;
}

bmt::AgentInfo info_of(const AgentTrack & t) { return {t.kind, t.length, t.width, t.height}; }

AgentState uncenter(AgentState s, const Point2 & c)
{
  if (!s.valid) return AgentState{0.0, 0.0, 0.0, 0.0, false};
  s.x += c.x;
  s.y += c.y;
  return s;
}

std::vector<int> token_ids(const std::vector<kinematics::MotionToken> & tokens)
{
  std::vector<int> ids;
  for (const auto & z : tokens) ids.push_back(z.id);
  return ids;
}

std::string unique_adv_id(const Scenario & s)
{
  auto taken = [&](const std::string & id) {
    return std::any_of(s.agents.begin(), s.agents.end(), [&](const AgentTrack & a) { return a.id == id; });
  };
  std::string id = "adv";
  for (int k = 1; taken(id); ++k) id = "adv_" + std::to_string(k);
  return id;
}

/// Reverse reconstruction of the ADV (and, in closed-loop mode, everyone
/// else) from step t_c in the centered frame.
struct ReversePass
{
  bmt::RolloutResult result;  // agents in centered order, ADV last
};

ReversePass reverse_pass(const scenario::CenteredScenario & cs, const AgentState & adv_anchor,
                         const bmt::AgentInfo & adv_info, int t_c, bool force_traffic,
                         const bmt::SceneEmbedding & scene, const bmt::BmtModel & model, Rng & rng,
                         const bmt::RolloutOptions & opt)
{
  const kinematics::TokenSpace ts = model.config().token_space();
  std::vector<bmt::RolloutAgent> agents;
  for (const AgentTrack & t : cs.scenario.agents) {
    bmt::RolloutAgent a;
    a.info = info_of(t);
    a.anchor = t.states[t_c];
    if (!a.anchor.valid) a.anchor = AgentState{0.0, 0.0, 0.0, 0.0, false};
    if (force_traffic && a.anchor.valid) {
      a.forced = true;
      const int f = run_start(t.states, t_c);
      if (f < t_c) {
        a.forced_tokens = token_ids(
          kinematics::tokenize_states(t.states, f, t_c, {t.length, t.width}, Direction::kReverse, ts).tokens);
      }
    }
    agents.push_back(std::move(a));
  }
  bmt::RolloutAgent adv;
  adv.info = adv_info;
  adv.anchor = adv_anchor;
  agents.push_back(adv);
  return {bmt::rollout(agents, Direction::kReverse, t_c, scene, model, rng, opt)};
}

}  // namespace

AdvResult build_adversary(const Scenario & s, const CollisionSpec & spec, GenerationMode mode,
                          const bmt::BmtModel & model, Rng & rng, const bmt::RolloutOptions & opt)
{
  if (spec.t_c < kMinCollisionStep || spec.t_c >= s.num_steps) {
    throw std::invalid_argument("build_adversary: t_c out of range");
  }
  const scenario::CenteredScenario cs = scenario::preprocess(s);
  const Point2 c = cs.center;
  const bmt::SceneEmbedding scene = bmt::encode_scene(cs, model);
  const kinematics::TokenSpace ts = model.config().token_space();
  const int t_c = spec.t_c;
  const int n = static_cast<int>(cs.scenario.agents.size());

  const AgentState spec_state{spec.adv_position.x, spec.adv_position.y,
                              normalize_angle(spec.adv_heading), spec.adv_speed, true};
  AgentState anchor = spec_state;
  anchor.x -= c.x;
  anchor.y -= c.y;
  const bmt::AgentInfo adv_info{spec.adv_kind, spec.adv_length, spec.adv_width, spec.adv_height};

  const bool replay_like = mode != GenerationMode::kClosedLoopReverse;
  const ReversePass rev = reverse_pass(cs, anchor, adv_info, t_c, replay_like, scene, model, rng, opt);
  const std::vector<AgentState> & adv_rev = rev.result.states[n];

  AdvResult out;
  out.spec = spec;
  out.mode = mode;
  out.scenario = s;

  AgentTrack adv;
  adv.id = unique_adv_id(s);
  adv.kind = spec.adv_kind;
  adv.length = spec.adv_length;
  adv.width = spec.adv_width;
  adv.height = spec.adv_height;
  adv.is_ego = false;
  adv.states.assign(static_cast<std::size_t>(s.num_steps), AgentState{0.0, 0.0, 0.0, 0.0, false});
  for (int k = 0; k < t_c; ++k) adv.states[k] = uncenter(adv_rev[k], c);
  adv.states[t_c] = spec_state;

  if (mode == GenerationMode::kClosedLoopReverse) {
    for (int i = 0; i < n; ++i) {
      AgentTrack & track = out.scenario.agents[cs.source_index[i]];
      if (!track.states[t_c].valid) continue;
      for (int k = 0; k < t_c; ++k) track.states[k] = uncenter(rev.result.states[i][k], c);
    }
  } else if (mode == GenerationMode::kForwardRefine) {
    // Forward pass from step 0: the ADV replays its reconstruction, the ego
    // keeps its recorded motion, the remaining traffic reacts.
    const int horizon = s.num_steps - 1;
    std::vector<bmt::RolloutAgent> agents;
    for (int i = 0; i < n; ++i) {
      const AgentTrack & t = cs.scenario.agents[i];
      bmt::RolloutAgent a;
      a.info = info_of(t);
      a.anchor = t.states[0].valid ? t.states[0] : AgentState{0.0, 0.0, 0.0, 0.0, false};
      if (t.is_ego && a.anchor.valid) {
        a.forced = true;
        const int l = run_end(t.states, 0);
        if (l > 0) {
          a.forced_tokens = token_ids(
            kinematics::tokenize_states(t.states, 0, l, {t.length, t.width}, Direction::kForward, ts).tokens);
        }
      }
      agents.push_back(std::move(a));
    }
    bmt::RolloutAgent a;
    a.info = adv_info;
    a.anchor = adv_rev[0];
    a.forced = true;
    std::vector<int> rev_tokens = rev.result.tokens[n];
    a.forced_tokens.assign(rev_tokens.rbegin(), rev_tokens.rend());
    agents.push_back(std::move(a));
    const bmt::RolloutResult fwd = bmt::rollout(agents, Direction::kForward, horizon, scene, model, rng, opt);
    for (int i = 0; i < n; ++i) {
      const AgentTrack & ct = cs.scenario.agents[i];
      if (ct.is_ego || !ct.states[0].valid) continue;
      AgentTrack & track = out.scenario.agents[cs.source_index[i]];
      for (int k = 1; k < s.num_steps; ++k) track.states[k] = uncenter(fwd.states[i][k], c);
    }
  }

  out.scenario.agents.push_back(std::move(adv));
  return out;
}

FilterStats adversary_stats(const Scenario & augmented, int t_c)
{
  FilterStats st;
  const AgentTrack & adv = augmented.agents.back();
  const int ego = augmented.ego_index();
  double speed_sum = 0.0;
  int speed_count = 0;
  const AgentState * prev = nullptr;
  for (int t = 0; t <= t_c && t < static_cast<int>(adv.states.size()); ++t) {
    const AgentState & s = adv.states[t];
    if (!s.valid) {
      prev = nullptr;
      continue;
    }
    speed_sum += std::abs(s.speed);
    ++speed_count;
    if (prev) {
      const double ds = std::hypot(s.x - prev->x, s.y - prev->y);
      st.path_length += ds;
      const double k = std::abs(angle_diff(s.heading, prev->heading)) / std::max(ds, kMinArcStep);
      st.max_curvature = std::max(st.max_curvature, k);
    }
    prev = &s;
  }
  st.mean_speed = speed_count ? speed_sum / speed_count : 0.0;
  if (ego >= 0) {
    const AgentTrack & et = augmented.agents[ego];
    for (int t = 0; t < static_cast<int>(adv.states.size()); ++t) {
      if (!adv.states[t].valid || !et.states[t].valid) continue;
      if (metrics::box_overlap(metrics::box_of(adv, t), metrics::box_of(et, t))) {
        st.first_overlap_step = t;
        break;
      }
    }
  }
  return st;
}

AdvResult filter_adversary(AdvResult r)
{
  r.stats = adversary_stats(r.scenario, r.spec.t_c);
  r.rejection_reason.reset();
  if (r.stats.path_length < kMinPathLength) {
    r.rejection_reason = RejectionReason::kTooShort;
  } else if (r.stats.mean_speed < kMinMeanSpeed) {
    r.rejection_reason = RejectionReason::kTooSlow;
  } else if (r.stats.max_curvature > kMaxCurvature) {
    r.rejection_reason = RejectionReason::kCurvature;
  } else if (r.stats.first_overlap_step >= 0 && r.stats.first_overlap_step < r.spec.t_c) {
    r.rejection_reason = RejectionReason::kEarlyCollision;
  }
  r.accepted = !r.rejection_reason.has_value();
  return r;
}

std::vector<AdvResult> generate_batch(const Scenario & s, int num_modes, GenerationMode mode,
                                      const bmt::BmtModel & model, const bmt::RolloutOptions & opt,
                                      Rng & rng, int max_resamples)
{
  if (num_modes < 1) throw std::invalid_argument("generate_batch: num_modes must be >= 1");
  if (max_resamples < 0) throw std::invalid_argument("generate_batch: max_resamples must be >= 0");
  const std::uint64_t base = rng.next_u64();
  std::vector<AdvResult> out;
  for (int k = 0; k < num_modes; ++k) {
    const std::uint64_t slot_seed = Rng::mix_seed(base, static_cast<std::uint64_t>(k));
    std::optional<AdvResult> best;
    for (int attempt = 0; attempt <= max_resamples; ++attempt) {
      const std::uint64_t seed = Rng::mix_seed(slot_seed, static_cast<std::uint64_t>(attempt));
      Rng local(seed);
      const CollisionSpec spec = sample_collision(s, local, {});
      AdvResult r = filter_adversary(build_adversary(s, spec, mode, model, local, opt));
      r.seed = seed;
      if (r.accepted) {
        best = std::move(r);
        break;
      }
      if (!best || static_cast<int>(*r.rejection_reason) > static_cast<int>(*best->rejection_reason)) {
        best = std::move(r);
      }
    }
    out.push_back(std::move(*best));
  }
  return out;
}

nlohmann::ordered_json sidecar_json(const AdvResult & r)
{
  nlohmann::ordered_json spec;
  spec["t_c"] = r.spec.t_c;
  spec["adv_heading"] = r.spec.adv_heading;
  spec["adv_speed"] = r.spec.adv_speed;
  spec["adv_position"] = {r.spec.adv_position.x, r.spec.adv_position.y};
  spec["adv_shape"] = {r.spec.adv_length, r.spec.adv_width};
  spec["adv_kind"] = std::string(scenario::to_string(r.spec.adv_kind));
  nlohmann::ordered_json j;
  j["spec"] = spec;
  j["mode"] = std::string(to_string(r.mode));
  j["accepted"] = r.accepted;
  j["rejection_reason"] = r.rejection_reason ? nlohmann::ordered_json(std::string(to_string(*r.rejection_reason)))
                                             : nlohmann::ordered_json(nullptr);
  j["seed"] = r.seed;
  j["adv_id"] = r.scenario.agents.empty() ? std::string() : r.adv().id;
  nlohmann::ordered_json stats;
  stats["path_length"] = r.stats.path_length;
  stats["mean_speed"] = r.stats.mean_speed;
  stats["max_curvature"] = r.stats.max_curvature;
  stats["first_overlap_step"] = r.stats.first_overlap_step;
  j["filter"] = stats;
  return j;
}

}  // namespace revsim::adversary
