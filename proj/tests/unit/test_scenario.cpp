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
#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "revsim/common/errors.hpp"
#include "revsim/kinematics/tokenizer.hpp"
#include "revsim/metrics/metrics.hpp"
#include "revsim/scenario/io.hpp"
#include "revsim/scenario/preprocess.hpp"
#include "revsim/scenario/synth.hpp"

namespace revsim
{
namespace
{

using scenario::Scenario;

const char * kMinimal = R"({
  "scenario_id": "minimal", "dt": 0.5, "num_steps": 19,
  "map": [{"kind": "lane", "points": [[0, 0], [10, 0]]}],
  "traffic_lights": [],
  "agents": [{"id": "e", "kind": "vehicle", "length": 4.8, "width": 2.0, "height": 1.6,
              "is_ego": true, "states": [STATES]}]
})";

std::string minimal_json(double dt = 0.5, bool second_ego = false)
{
  std::string states;
  for (int k = 0; k < 19; ++k) {
    if (k) states += ",";
    states += "{\"x\": " + std::to_string(k) + ", \"y\": 0, \"heading\": 0, \"speed\": 2, \"valid\": true}";
  }
  std::string text = kMinimal;
  text.replace(text.find("STATES"), 6, states);
  if (dt != 0.5) text.replace(text.find("\"dt\": 0.5"), 9, "\"dt\": " + std::to_string(dt));
  if (second_ego) {
    const auto pos = text.rfind("]\n}");
    std::string agent = text.substr(text.find("{\"id\""));
    agent = agent.substr(0, agent.rfind("]\n}"));
    agent.replace(agent.find("\"e\""), 3, "\"f\"");
    text.insert(pos, "," + agent);
  }
  return text;
}

void expect_near_scenarios(const Scenario & a, const Scenario & b, double tol)
{
  ASSERT_EQ(a.agents.size(), b.agents.size());
  ASSERT_EQ(a.map.size(), b.map.size());
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    const auto & ta = a.agents[i];
    const auto & tb = b.agents[i];
    EXPECT_EQ(ta.id, tb.id);
    EXPECT_EQ(ta.kind, tb.kind);
    EXPECT_EQ(ta.is_ego, tb.is_ego);
    EXPECT_NEAR(ta.length, tb.length, tol);
    ASSERT_EQ(ta.states.size(), tb.states.size());
    for (std::size_t k = 0; k < ta.states.size(); ++k) {
      EXPECT_EQ(ta.states[k].valid, tb.states[k].valid);
      EXPECT_NEAR(ta.states[k].x, tb.states[k].x, tol);
      EXPECT_NEAR(ta.states[k].y, tb.states[k].y, tol);
      EXPECT_NEAR(ta.states[k].heading, tb.states[k].heading, tol);
      EXPECT_NEAR(ta.states[k].speed, tb.states[k].speed, tol);
    }
  }
  for (std::size_t i = 0; i < a.map.size(); ++i) {
    ASSERT_EQ(a.map[i].points.size(), b.map[i].points.size());
    for (std::size_t k = 0; k < a.map[i].points.size(); ++k) {
      EXPECT_NEAR(a.map[i].points[k].x, b.map[i].points[k].x, tol);
      EXPECT_NEAR(a.map[i].points[k].y, b.map[i].points[k].y, tol);
    }
  }
}

TEST(ScenarioIo, MinimalFileLoads)
{
  const Scenario s = scenario::parse_scenario(minimal_json());
  EXPECT_EQ(s.num_steps, 19);
  EXPECT_EQ(s.agents.size(), 1u);
  EXPECT_EQ(s.ego_index(), 0);
  EXPECT_EQ(s.map.size(), 1u);
}

TEST(ScenarioIo, WrongDtIsSchemaError)
{
  try {
    scenario::parse_scenario(minimal_json(0.1));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError & e) {
    EXPECT_EQ(e.field(), "dt");
  }
}

TEST(ScenarioIo, TwoEgosIsSchemaError)
{
  try {
    scenario::parse_scenario(minimal_json(0.5, true));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError & e) {
    EXPECT_EQ(e.field(), "is_ego");
  }
}

TEST(ScenarioIo, MalformedJsonIsParseError)
{
  EXPECT_THROW(scenario::parse_scenario("{\"scenario_id\": "), ParseError);
  std::string text = minimal_json();
  text.replace(text.find("\"num_steps\": 19,"), 16, "");
  EXPECT_THROW(scenario::parse_scenario(text), ParseError);
}

TEST(ScenarioIo, VelocityVectorProjectsOntoHeading)
{
  std::string text = minimal_json();
  const std::string from = "\"heading\": 0, \"speed\": 2";
  text.replace(text.find(from), from.size(), "\"heading\": 1.5707963267948966, \"vx\": 3, \"vy\": 4");
  const Scenario s = scenario::parse_scenario(text);
  EXPECT_NEAR(s.agents[0].states[0].speed, 4.0, 1e-12);
}

TEST(ScenarioIo, HeadingsNormalizedOnLoad)
{
  std::string text = minimal_json();
  const std::string from = "\"heading\": 0, \"speed\": 2";
  text.replace(text.find(from), from.size(), "\"heading\": 7.0, \"speed\": 2");
  const Scenario s = scenario::parse_scenario(text);
  EXPECT_NEAR(s.agents[0].states[0].heading, 7.0 - 2.0 * kPi, 1e-12);
}

TEST(ScenarioIo, SynthRoundTripWithin1e9)
{
  const auto dir = test::temp_dir("roundtrip");
  for (const auto & s : scenario::synth_scenarios(4, 11)) {
    const auto path = dir / (s.scenario_id + ".json");
    scenario::save_scenario(s, path);
    expect_near_scenarios(s, scenario::load_scenario(path), 1e-9);
  }
}

TEST(ScenarioIo, UnwritablePathIsIoError)
{
  const Scenario s = test::simple_scenario();
  EXPECT_THROW(scenario::save_scenario(s, "/nonexistent_dir_revsim/x/y.json"), IoError);
}

TEST(ScenarioIo, MissingFileIsIoError)
{
  EXPECT_THROW(scenario::load_scenario("/nonexistent_dir_revsim/none.json"), IoError);
}

TEST(ScenarioIo, InvalidFlagPreserved)
{
  Scenario s = test::simple_scenario();
  s.agents[1].states[4].valid = false;
  const Scenario back = scenario::parse_scenario(scenario::serialize_scenario(s));
  EXPECT_FALSE(back.agents[1].states[4].valid);
  EXPECT_TRUE(back.agents[1].states[5].valid);
}

TEST(Preprocess, CentersOnMapBounds)
{
  Scenario s = test::simple_scenario();
  s.map = {{scenario::PolylineKind::kLane, {{0.0, 0.0}, {100.0, 50.0}}}};
  const auto cs = scenario::preprocess(s);
  EXPECT_NEAR(cs.center.x, 50.0, 1e-12);
  EXPECT_NEAR(cs.center.y, 25.0, 1e-12);
  EXPECT_NEAR(cs.scenario.map[0].points[0].x, -50.0, 1e-12);
  EXPECT_NEAR(cs.scenario.map[0].points[0].y, -25.0, 1e-12);
  EXPECT_NEAR(cs.scenario.agents[0].states[0].x, s.agents[0].states[0].x - 50.0, 1e-12);
  EXPECT_NEAR(cs.scenario.agents[0].states[0].y, s.agents[0].states[0].y - 25.0, 1e-12);
}

TEST(Preprocess, CenteredSceneIsFixedPoint)
{
  Scenario s = test::simple_scenario();
  s.map = {{scenario::PolylineKind::kLane, {{-30.0, -10.0}, {30.0, 10.0}}}};
  const auto cs = scenario::preprocess(s);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    for (int k = 0; k < s.num_steps; ++k) {
      EXPECT_EQ(cs.scenario.agents[i].states[k].x, s.agents[i].states[k].x);
      EXPECT_EQ(cs.scenario.agents[i].states[k].y, s.agents[i].states[k].y);
    }
  }
}

TEST(Preprocess, EgoMovedToFrontAndOthersByDistance)
{
  Scenario s = test::simple_scenario();
  s.agents.clear();
  s.agents.push_back(test::straight_track("far", 0.0, 30.0, 0.0, 5.0));
  s.agents.push_back(test::straight_track("near", 0.0, 4.0, 0.0, 5.0));
  s.agents.push_back(test::straight_track("ego", 0.0, 0.0, 0.0, 5.0, true));
  const auto cs = scenario::preprocess(s);
  EXPECT_EQ(cs.scenario.agents[0].id, "ego");
  EXPECT_EQ(cs.scenario.agents[1].id, "near");
  EXPECT_EQ(cs.scenario.agents[2].id, "far");
  EXPECT_EQ(cs.source_index, (std::vector<int>{2, 1, 0}));
}

TEST(Preprocess, StateFeatureLayout)
{
  const auto cs = scenario::preprocess(test::simple_scenario());
  const auto & f = cs.feature(0, 3);
  const auto & st = cs.scenario.agents[0].states[3];
  EXPECT_EQ(f[0], st.x);
  EXPECT_EQ(f[1], st.y);
  EXPECT_NEAR(f[2], std::sin(st.heading), 1e-15);
  EXPECT_NEAR(f[3], std::cos(st.heading), 1e-15);
  EXPECT_EQ(f[4], st.speed);
  EXPECT_EQ(f[5], 4.8);
  EXPECT_EQ(f[8], 1.0);  // vehicle
  EXPECT_EQ(f[11], 1.0); // valid
  EXPECT_EQ(f[12], 1.0); // ego
  EXPECT_EQ(f[13] + f[14] + f[15], 0.0);
  EXPECT_EQ(cs.segments[0].size(), 2u);
  EXPECT_NEAR(cs.segments[0][0].length, 80.0, 1e-9);
}

TEST(Preprocess, PairwiseDistancesPreserved)
{
  for (const auto & s : scenario::synth_scenarios(5, 21)) {
    const auto cs = scenario::preprocess(s);
    const int n = static_cast<int>(s.agents.size());
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const int ci = cs.source_index[i];
        const int cj = cs.source_index[j];
        for (int k = 0; k < s.num_steps; ++k) {
          const auto & a = s.agents[ci].states[k];
          const auto & b = s.agents[cj].states[k];
          const auto & a2 = cs.scenario.agents[i].states[k];
          const auto & b2 = cs.scenario.agents[j].states[k];
          EXPECT_NEAR(std::hypot(a.x - b.x, a.y - b.y), std::hypot(a2.x - b2.x, a2.y - b2.y), 1e-9);
        }
      }
    }
  }
}

TEST(Synth, DeterministicBytes)
{
  const auto a = scenario::synth_scenarios(1, 7);
  const auto b = scenario::synth_scenarios(1, 7);
  EXPECT_EQ(scenario::serialize_scenario(a[0]), scenario::serialize_scenario(b[0]));
  const auto c = scenario::synth_scenarios(1, 8);
  EXPECT_NE(scenario::serialize_scenario(a[0]), scenario::serialize_scenario(c[0]));
}

TEST(Synth, ShapeOfOutput)
{
  for (const auto & s : scenario::synth_scenarios(12, 3)) {
    EXPECT_NO_THROW(scenario::validate(s));
    EXPECT_GE(s.agents.size(), 2u);
    EXPECT_LE(s.agents.size(), 8u);
    EXPECT_EQ(s.num_steps, 19);
    EXPECT_EQ(s.dt, 0.5);
    int lanes = 0;
    for (const auto & pl : s.map) lanes += pl.kind == scenario::PolylineKind::kLane;
    EXPECT_GE(lanes, 2);
    EXPECT_LE(lanes, 4);
  }
}

TEST(Synth, NoOverlapAtAnyStep)
{
  for (const auto & s : scenario::synth_scenarios(20, 5)) {
    const auto report = metrics::check_collisions(s);
    for (const auto & step : report.pairs_per_step) EXPECT_TRUE(step.empty()) << s.scenario_id;
  }
}

// Every consecutive recorded pair is reachable by some token within the
// per-step quantization bound of the continuous-control grid oracle.
TEST(Synth, TokenRepresentable)
{
  const kinematics::TokenSpace ts;
  double worst = 0.0;
  for (const auto & s : scenario::synth_scenarios(6, 9)) {
    for (const auto & a : s.agents) {
      for (int k = 0; k + 1 < s.num_steps; ++k) {
        if (!a.states[k].valid || !a.states[k + 1].valid) continue;
        const auto m = kinematics::tokenize_pair(a.states[k], a.states[k + 1], {a.length, a.width},
                                                 kinematics::Direction::kForward, ts);
        worst = std::max(worst, m.contour_error);
      }
    }
  }
  EXPECT_LE(worst, test::b_step_oracle(ts));
}

}  // namespace
}  // namespace revsim
