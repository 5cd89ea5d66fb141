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

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "revsim/adversary/adversary.hpp"
#include "revsim/bmt/model.hpp"
#include "revsim/common/angle.hpp"
#include "revsim/metrics/geometry.hpp"
#include "revsim/metrics/metrics.hpp"
#include "revsim/scenario/io.hpp"
#include "revsim/scenario/synth.hpp"

namespace revsim::adversary
{
namespace
{

using scenario::AgentState;
using scenario::AgentTrack;
using scenario::Scenario;

const bmt::BmtModel & small_model()
{
  static const bmt::BmtModel model = [] {
    bmt::BmtConfig cfg;
    cfg.hidden_dim = 16;
    cfg.num_heads = 2;
    cfg.num_encoder_layers = 1;
    cfg.num_decoder_blocks = 1;
    cfg.fourier_bands = 4;
    return bmt::BmtModel(cfg);
  }();
  return model;
}

bool overlap_at_tc(const AdvResult & r)
{
  const auto & ego = r.scenario.agents[r.scenario.ego_index()];
  return metrics::box_overlap(metrics::box_of(ego, r.spec.t_c), metrics::box_of(r.adv(), r.spec.t_c));
}

// -------------------------------------------------------------- contact

TEST(Contact, HeadOnPlacement)
{
  const metrics::OrientedBox ego{0, 0, 0, 4.8, 2.0};
  const auto p = contact_position(ego, kPi, 4.8, 2.0);
  EXPECT_NEAR(p.x, 4.75, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  const metrics::OrientedBox adv{p.x, p.y, kPi, 4.8, 2.0};
  EXPECT_NEAR(metrics::box_separation(ego, adv), -0.05, 1e-12);
}

TEST(Contact, AnyHeadingGivesPenetrationDepth)
{
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    const metrics::OrientedBox ego{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-3, 3), 4.8, 2.0};
    const double h = rng.uniform(0, kTwoPi);
    const auto shape = adv_shape(static_cast<AgentKind>(k % 3));
    const auto p = contact_position(ego, h, shape[0], shape[1]);
    const metrics::OrientedBox adv{p.x, p.y, h, shape[0], shape[1]};
    EXPECT_NEAR(metrics::box_separation(ego, adv), -0.05, 1e-9);
    EXPECT_TRUE(metrics::box_overlap(ego, adv));
    // The adversary sits behind its own heading relative to the ego.
    EXPECT_LT((p.x - ego.cx) * std::cos(h) + (p.y - ego.cy) * std::sin(h), 1e-9);
  }
}

TEST(Contact, ShapesByKind)
{
  EXPECT_EQ(adv_shape(AgentKind::kVehicle)[0], 4.8);
  EXPECT_EQ(adv_shape(AgentKind::kVehicle)[1], 2.0);
  EXPECT_EQ(adv_shape(AgentKind::kCyclist)[0], 1.8);
  EXPECT_EQ(adv_shape(AgentKind::kCyclist)[1], 0.6);
  EXPECT_EQ(adv_shape(AgentKind::kPedestrian)[0], 0.5);
  EXPECT_EQ(adv_shape(AgentKind::kPedestrian)[1], 0.5);
}

// ------------------------------------------------------------- sampling

TEST(SampleCollision, RangesAndContact)
{
  const auto data = scenario::synth_scenarios(5, 40);
  Rng rng(1);
  for (const auto & s : data) {
    const auto & ego = s.agents[s.ego_index()];
    for (int k = 0; k < 50; ++k) {
      const auto spec = sample_collision(s, rng);
      EXPECT_GE(spec.t_c, 2);
      EXPECT_LE(spec.t_c, 18);
      EXPECT_TRUE(ego.states[spec.t_c].valid);
      EXPECT_GE(spec.adv_heading, 0.0);
      EXPECT_LT(spec.adv_heading, kTwoPi);
      const double v = ego.states[spec.t_c].speed;
      EXPECT_GE(spec.adv_speed, std::max(kMinAdvSpeed, std::min(v - 2.0, kMaxAdvSpeed)) - 1e-12);
      EXPECT_LE(spec.adv_speed, std::min(kMaxAdvSpeed, std::max(v + 6.0, kMinAdvSpeed)) + 1e-12);
      EXPECT_EQ(spec.adv_kind, AgentKind::kVehicle);
      const metrics::OrientedBox adv{spec.adv_position.x, spec.adv_position.y, spec.adv_heading,
                                     spec.adv_length, spec.adv_width};
      EXPECT_TRUE(metrics::box_overlap(metrics::box_of(ego, spec.t_c), adv));
    }
  }
}

TEST(SampleCollision, DeterministicAndOverridable)
{
  const Scenario s = scenario::synth_scenarios(1, 41)[0];
  Rng a(5), b(5);
  const auto x = sample_collision(s, a);
  const auto y = sample_collision(s, b);
  EXPECT_EQ(x.t_c, y.t_c);
  EXPECT_EQ(x.adv_heading, y.adv_heading);
  EXPECT_EQ(x.adv_speed, y.adv_speed);
  EXPECT_EQ(x.adv_position, y.adv_position);

  CollisionOverrides ov;
  ov.t_c = 9;
  ov.adv_heading = 1.0;
  ov.adv_speed = 12.0;
  ov.adv_kind = AgentKind::kCyclist;
  Rng c(6);
  const auto z = sample_collision(s, c, ov);
  EXPECT_EQ(z.t_c, 9);
  EXPECT_EQ(z.adv_heading, 1.0);
  EXPECT_EQ(z.adv_speed, 12.0);
  EXPECT_EQ(z.adv_length, 1.8);
  EXPECT_EQ(z.adv_width, 0.6);
}

TEST(SampleCollision, NoValidEgoStepThrows)
{
  Scenario s = test::simple_scenario();
  for (int k = 2; k < 19; ++k) s.agents[0].states[k].valid = false;
  Rng rng(1);
  EXPECT_THROW(sample_collision(s, rng), std::invalid_argument);
}

// ---------------------------------------------------------------- build

TEST(Build, ReplayKeepsTrafficBytesAndAnchorsExactly)
{
  const bmt::RolloutOptions opt;
  for (const auto & s : scenario::synth_scenarios(4, 42)) {
    Rng rng(7);
    const auto spec = sample_collision(s, rng);
    const auto r = build_adversary(s, spec, GenerationMode::kReplay, small_model(), rng, opt);
    ASSERT_EQ(r.scenario.agents.size(), s.agents.size() + 1);
    Scenario without = r.scenario;
    without.agents.pop_back();
    EXPECT_EQ(scenario::serialize_scenario(without), scenario::serialize_scenario(s));
    const AgentState & at = r.adv().states[spec.t_c];
    EXPECT_NEAR(at.x, spec.adv_position.x, 1e-9);
    EXPECT_NEAR(at.y, spec.adv_position.y, 1e-9);
    EXPECT_NEAR(angle_diff(at.heading, spec.adv_heading), 0.0, 1e-9);
    EXPECT_NEAR(at.speed, spec.adv_speed, 1e-9);
    for (int t = spec.t_c + 1; t < 19; ++t) EXPECT_FALSE(r.adv().states[t].valid);
    for (int t = 0; t <= spec.t_c; ++t) EXPECT_TRUE(r.adv().states[t].valid);
    EXPECT_EQ(r.adv().id, "adv");
    EXPECT_FALSE(r.adv().is_ego);
    EXPECT_TRUE(overlap_at_tc(r));
    EXPECT_NO_THROW(scenario::validate(r.scenario));
  }
}

TEST(Build, AnyModeAnchorsOnSpec)
{
  const Scenario s = scenario::synth_scenarios(1, 43)[0];
  for (auto mode : {GenerationMode::kReplay, GenerationMode::kClosedLoopReverse, GenerationMode::kForwardRefine}) {
    Rng rng(8);
    const auto spec = sample_collision(s, rng);
    const auto r = build_adversary(s, spec, mode, small_model(), rng, {});
    const AgentState & at = r.adv().states[spec.t_c];
    EXPECT_NEAR(at.x, spec.adv_position.x, 1e-9);
    EXPECT_NEAR(at.y, spec.adv_position.y, 1e-9);
    EXPECT_NEAR(at.speed, spec.adv_speed, 1e-9);
    EXPECT_TRUE(overlap_at_tc(r));
    EXPECT_EQ(r.mode, mode);
  }
}

TEST(Build, ClosedLoopReverseRewritesOnlyThePast)
{
  const Scenario s = scenario::synth_scenarios(1, 44)[0];
  Rng rng(9);
  CollisionOverrides ov;
  ov.t_c = 10;
  const auto spec = sample_collision(s, rng, ov);
  const auto r = build_adversary(s, spec, GenerationMode::kClosedLoopReverse, small_model(), rng, {});
  bool changed = false;
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto & a = s.agents[i];
    const auto & b = r.scenario.agents[i];
    for (int t = spec.t_c; t < 19; ++t) EXPECT_EQ(a.states[t], b.states[t]);
    for (int t = 0; t < spec.t_c; ++t) changed |= !(a.states[t] == b.states[t]);
  }
  EXPECT_TRUE(changed);
}

TEST(Build, ForwardRefineKeepsReplayAdversary)
{
  const Scenario s = scenario::synth_scenarios(1, 45)[0];
  Rng r1(10), r2(10);
  const auto spec = sample_collision(s, r1);
  sample_collision(s, r2);
  const auto replay = build_adversary(s, spec, GenerationMode::kReplay, small_model(), r1, {});
  const auto refine = build_adversary(s, spec, GenerationMode::kForwardRefine, small_model(), r2, {});
  for (int t = 0; t < 19; ++t) {
    const auto & a = replay.adv().states[t];
    const auto & b = refine.adv().states[t];
    EXPECT_EQ(a.valid, b.valid);
    if (!a.valid) continue;
    EXPECT_NEAR(a.x, b.x, 1e-9);
    EXPECT_NEAR(a.y, b.y, 1e-9);
    EXPECT_NEAR(a.speed, b.speed, 1e-9);
  }
  const int ego = s.ego_index();
  EXPECT_EQ(refine.scenario.agents[ego], s.agents[ego]);
}

// --------------------------------------------------------------- filter

AdvResult planted(const std::vector<AgentState> & adv_states, int t_c)
{
  AdvResult r;
  r.scenario = test::simple_scenario();
  r.scenario.agents.resize(1);
  r.scenario.agents[0] = test::straight_track("ego", 0.0, 200.0, 0.0, 0.0, true);
  AgentTrack adv;
  adv.id = "adv";
  adv.states = adv_states;
  adv.states.resize(19, AgentState{0, 0, 0, 0, false});
  r.scenario.agents.push_back(adv);
  r.spec.t_c = t_c;
  return r;
}

TEST(Filter, StraightCandidateAccepted)
{
  std::vector<AgentState> st;
  for (int t = 0; t <= 10; ++t) st.push_back({4.0 * t, 0, 0, 8.0, true});
  const auto r = filter_adversary(planted(st, 10));
  EXPECT_TRUE(r.accepted);
  EXPECT_FALSE(r.rejection_reason.has_value());
  EXPECT_NEAR(r.stats.path_length, 40.0, 1e-9);
  EXPECT_EQ(r.stats.max_curvature, 0.0);
}

TEST(Filter, SharpTurnRejectedForCurvature)
{
  std::vector<AgentState> st;
  for (int t = 0; t <= 6; ++t) st.push_back({4.0 * t, 0, 0, 8.0, true});
  st.push_back({24.0 + 1.5, 0, kPi / 2, 3.0, true});
  const auto r = filter_adversary(planted(st, 7));
  EXPECT_FALSE(r.accepted);
  ASSERT_TRUE(r.rejection_reason.has_value());
  EXPECT_EQ(*r.rejection_reason, RejectionReason::kCurvature);
  EXPECT_NEAR(r.stats.max_curvature, (kPi / 2) / 1.5, 1e-9);
  EXPECT_NEAR(r.stats.max_curvature, 1.047, 1e-3);
}

TEST(Filter, ShortAndSlowAndEarlyCollision)
{
  std::vector<AgentState> st;
  for (int t = 0; t <= 6; ++t) st.push_back({0.5 * t, 0, 0, 1.0, true});
  auto r = filter_adversary(planted(st, 6));
  ASSERT_TRUE(r.rejection_reason.has_value());
  EXPECT_EQ(*r.rejection_reason, RejectionReason::kTooShort);

  st.clear();
  // 6 m of path but mostly standing still.
  for (int t = 0; t <= 12; ++t) st.push_back({t < 11 ? 0.0 : 3.0 * (t - 10), 0, 0, t < 11 ? 0.0 : 6.0, true});
  r = filter_adversary(planted(st, 12));
  ASSERT_TRUE(r.rejection_reason.has_value());
  EXPECT_EQ(*r.rejection_reason, RejectionReason::kTooSlow);

  st.clear();
  for (int t = 0; t <= 10; ++t) st.push_back({4.0 * t, 200.0, 0, 8.0, true});
  r = filter_adversary(planted(st, 10));
  ASSERT_TRUE(r.rejection_reason.has_value());
  EXPECT_EQ(*r.rejection_reason, RejectionReason::kEarlyCollision);
  EXPECT_EQ(r.stats.first_overlap_step, 0);
}

TEST(Filter, CircleArcCurvature)
{
  for (double radius : {5.0, 10.0, 20.0, 50.0}) {
    const double speed = 1.5;  // 0.75 m per step
    std::vector<AgentState> st;
    for (int t = 0; t <= 18; ++t) {
      const double phi = speed * 0.5 * t / radius;
      st.push_back({radius * std::sin(phi), radius * (1 - std::cos(phi)), normalize_angle(phi), speed, true});
    }
    const auto stats = adversary_stats(planted(st, 18).scenario, 18);
    EXPECT_NEAR(stats.max_curvature, 1.0 / radius, 0.05 / radius) << radius;
  }
}

TEST(Filter, NeverMutatesTrajectories)
{
  const Scenario s = scenario::synth_scenarios(1, 46)[0];
  Rng rng(11);
  const auto spec = sample_collision(s, rng);
  const auto built = build_adversary(s, spec, GenerationMode::kReplay, small_model(), rng, {});
  const auto filtered = filter_adversary(built);
  EXPECT_EQ(filtered.scenario, built.scenario);
  EXPECT_EQ(filtered.spec.t_c, built.spec.t_c);
}

// ---------------------------------------------------------------- batch

TEST(Batch, SixModesAllHitAndDeterministic)
{
  const Scenario s = scenario::synth_scenarios(1, 47)[0];
  Rng a(12), b(12);
  const auto x = generate_batch(s, 6, GenerationMode::kReplay, small_model(), {}, a, 3);
  const auto y = generate_batch(s, 6, GenerationMode::kReplay, small_model(), {}, b, 3);
  ASSERT_EQ(x.size(), 6u);
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_TRUE(overlap_at_tc(x[k]));
    EXPECT_EQ(scenario::serialize_scenario(x[k].scenario), scenario::serialize_scenario(y[k].scenario));
    EXPECT_EQ(sidecar_json(x[k]).dump(), sidecar_json(y[k]).dump());
  }
  EXPECT_NE(x[0].seed, x[1].seed);
}

TEST(Batch, ZeroResamplesKeepsFirstCandidate)
{
  const Scenario s = scenario::synth_scenarios(1, 48)[0];
  Rng rng(13);
  Rng probe(13);
  const std::uint64_t base = probe.next_u64();
  const auto out = generate_batch(s, 4, GenerationMode::kReplay, small_model(), {}, rng, 0);
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t k = 0; k < out.size(); ++k) {
    EXPECT_EQ(out[k].seed, Rng::mix_seed(Rng::mix_seed(base, k), 0));
    Rng local(out[k].seed);
    const auto spec = sample_collision(s, local);
    EXPECT_EQ(out[k].spec.t_c, spec.t_c);
    EXPECT_EQ(out[k].spec.adv_heading, spec.adv_heading);
  }
}

TEST(Batch, SidecarFields)
{
  const Scenario s = scenario::synth_scenarios(1, 49)[0];
  Rng rng(14);
  const auto r = generate_batch(s, 1, GenerationMode::kForwardRefine, small_model(), {}, rng, 0)[0];
  const auto j = sidecar_json(r);
  for (const char * key : {"spec", "mode", "accepted", "rejection_reason", "seed", "adv_id"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["mode"], "forward_refine");
  EXPECT_EQ(j["spec"]["t_c"], r.spec.t_c);
  EXPECT_EQ(j["accepted"].get<bool>(), r.accepted);
}

TEST(Modes, StringRoundTrip)
{
  for (auto m : {GenerationMode::kReplay, GenerationMode::kClosedLoopReverse, GenerationMode::kForwardRefine}) {
    EXPECT_EQ(generation_mode_from_string(to_string(m)), m);
  }
  EXPECT_FALSE(generation_mode_from_string("bogus").has_value());
}

}  // namespace
}  // namespace revsim::adversary
