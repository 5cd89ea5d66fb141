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
#include <random>

#include "fixtures.hpp"
#include "revsim/common/angle.hpp"
#include "revsim/common/errors.hpp"
#include "revsim/metrics/evaluate.hpp"
#include "revsim/metrics/geometry.hpp"
#include "revsim/metrics/histogram.hpp"
#include "revsim/metrics/metrics.hpp"
#include "revsim/scenario/io.hpp"
#include "revsim/scenario/synth.hpp"

namespace revsim::metrics
{
namespace
{

using Probs = std::vector<double>;

OrientedBox box(double x, double y, double h, double l = 4.8, double w = 2.0) { return {x, y, h, l, w}; }

TEST(BoxOverlap, Examples)
{
  EXPECT_TRUE(box_overlap(box(0, 0, 0), box(0, 0, 0)));
  EXPECT_FALSE(box_overlap(box(0, 0, 0, 1, 1), box(10, 0, 0, 1, 1)));
  EXPECT_TRUE(box_overlap(box(0, 0, 0), box(4.75, 0, 0)));
  EXPECT_NEAR(box_separation(box(0, 0, 0), box(4.75, 0, 0)), -0.05, 1e-12);
  EXPECT_TRUE(box_overlap(box(0, 0, 0), box(4.8, 0, 0)));  // touching counts
  EXPECT_FALSE(box_overlap(box(0, 0, 0), box(4.81, 0, 0)));
}

TEST(BoxOverlap, SymmetricAndRigidInvariant)
{
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> pos(-6, 6);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> ext(0.5, 5);
  for (int k = 0; k < 2000; ++k) {
    const OrientedBox a = box(pos(gen), pos(gen), ang(gen), ext(gen), ext(gen));
    const OrientedBox b = box(pos(gen), pos(gen), ang(gen), ext(gen), ext(gen));
    const bool ab = box_overlap(a, b);
    EXPECT_EQ(ab, box_overlap(b, a));
    const double sep = box_separation(a, b);
    if (std::abs(sep) < 1e-9) continue;  // too close to the boundary to compare
    const double rot = ang(gen);
    const double tx = pos(gen) * 10;
    const double ty = pos(gen) * 10;
    auto move = [&](OrientedBox o) {
      const double x = o.cx * std::cos(rot) - o.cy * std::sin(rot) + tx;
      const double y = o.cx * std::sin(rot) + o.cy * std::cos(rot) + ty;
      return box(x, y, o.heading + rot, o.length, o.width);
    };
    EXPECT_EQ(ab, box_overlap(move(a), move(b)));
  }
}

TEST(BoxOverlap, AgreesWithSampledPointOracle)
{
  // A point of b inside a (or of a inside b), or crossing edges, implies
  // overlap; sample densely along both boundaries.
  auto inside = [](const OrientedBox & o, double x, double y) {
    const double dx = x - o.cx;
    const double dy = y - o.cy;
    const double u = dx * std::cos(o.heading) + dy * std::sin(o.heading);
    const double v = -dx * std::sin(o.heading) + dy * std::cos(o.heading);
    return std::abs(u) <= o.length / 2 && std::abs(v) <= o.width / 2;
  };
  auto boundary_hits = [&](const OrientedBox & a, const OrientedBox & b) {
    const auto c = a.corners();
    for (int e = 0; e < 4; ++e) {
      const auto p = c[e];
      const auto q = c[(e + 1) % 4];
      for (int s = 0; s <= 400; ++s) {
        const double t = s / 400.0;
        if (inside(b, p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))) return true;
      }
    }
    return false;
  };
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> pos(-5, 5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int k = 0; k < 1000; ++k) {
    const OrientedBox a = box(pos(gen), pos(gen), ang(gen));
    const OrientedBox b = box(pos(gen), pos(gen), ang(gen), 1.8, 0.6);
    if (std::abs(box_separation(a, b)) < 0.02) continue;
    EXPECT_EQ(box_overlap(a, b), boundary_hits(a, b) || boundary_hits(b, a));
  }
}

TEST(Collisions, EmptyScenarioHasZeroRate)
{
  scenario::Scenario s;
  const auto r = check_collisions(s);
  EXPECT_EQ(r.agent_collision_rate, 0.0);
}

TEST(Collisions, SynthHasNone)
{
  for (const auto & s : scenario::synth_scenarios(5, 2)) {
    EXPECT_EQ(check_collisions(s).agent_collision_rate, 0.0);
  }
}

TEST(Collisions, CountsAgentsInvolved)
{
  scenario::Scenario s = test::simple_scenario();
  s.agents.push_back(test::straight_track("bump", 4.0, 0.0, 0.0, 10.0));
  const auto r = check_collisions(s);
  EXPECT_TRUE(r.pair_collides(0, 2));
  EXPECT_FALSE(r.pair_collides(0, 1));
  EXPECT_EQ(r.first_collision_step(0, 2), 0);
  EXPECT_NEAR(r.agent_collision_rate, 2.0 / 3.0, 1e-12);
}

TEST(Ttc, HeadOnClosedForm)
{
  scenario::Scenario s = test::simple_scenario();
  s.agents = {test::straight_track("a", 0, 0, 0, 10.0, true), test::straight_track("b", 40, 0, kPi, 10.0)};
  const auto t = ttc(s, 0, 0);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, (40.0 - 5.2) / 20.0, 1e-12);
}

TEST(Ttc, ParallelAndRecedingHaveNone)
{
  scenario::Scenario s = test::simple_scenario();
  s.agents = {test::straight_track("a", 0, 0, 0, 10.0, true), test::straight_track("b", 0, 8, 0, 10.0)};
  EXPECT_FALSE(ttc(s, 0, 0).has_value());
  s.agents[1] = test::straight_track("b", 20, 0, 0, 15.0);
  EXPECT_FALSE(ttc(s, 0, 0).has_value());
}

TEST(Ttc, MatchesMillisecondSimulation)
{
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> pos(-60, 60);
  std::uniform_real_distribution<double> vel(-20, 20);
  std::uniform_real_distribution<double> rad(1.0, 6.0);
  const double fine = 1e-3;
  int contacts = 0;
  for (int k = 0; k < 500; ++k) {
    const double px = pos(gen), py = pos(gen), vx = vel(gen), vy = vel(gen), r = rad(gen);
    const auto t = disc_ttc(px, py, vx, vy, r);
    // Brute force: first fine step whose separation is within r, up to the cap.
    std::optional<double> sim;
    for (int i = 0; i <= static_cast<int>(kTtcCap / fine); ++i) {
      const double tt = i * fine;
      if (std::hypot(px + vx * tt, py + vy * tt) <= r) {
        sim = tt;
        break;
      }
    }
    if (!sim) {
      // Either no approach at all or contact after the cap.
      if (t) EXPECT_GE(*t, kTtcCap - fine);
      continue;
    }
    ++contacts;
    ASSERT_TRUE(t.has_value()) << k;
    EXPECT_LE(std::abs(*t - *sim), fine + 1e-12) << k;
  }
  EXPECT_GT(contacts, 10);
}

Trajectory line(double x0, double y0, double dx, double dy, int n = 19)
{
  Trajectory t;
  for (int k = 0; k < n; ++k) t.push_back({x0 + dx * k, y0 + dy * k, true});
  return t;
}

TEST(Displacement, Examples)
{
  const ModeTrajectories gt{line(0, 0, 1, 0)};
  const auto same = displacement_metrics({gt}, gt);
  EXPECT_EQ(same.sfde_avg, 0.0);
  EXPECT_EQ(same.sade_min, 0.0);

  const ModeTrajectories off{line(3, 4, 1, 0)};
  const auto m = displacement_metrics({off}, gt);
  EXPECT_DOUBLE_EQ(m.sfde_avg, 5.0);
  EXPECT_DOUBLE_EQ(m.sade_avg, 5.0);

  const ModeTrajectories two{line(2, 0, 1, 0)};
  const ModeTrajectories six{line(6, 0, 1, 0)};
  const auto mm = displacement_metrics({two, six}, gt);
  EXPECT_DOUBLE_EQ(mm.sfde_min, 2.0);
  EXPECT_DOUBLE_EQ(mm.sfde_avg, 4.0);
}

TEST(Displacement, MinNotAboveAvg)
{
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-5, 5);
  const ModeTrajectories gt{line(0, 0, 1, 0), line(0, 5, 0.5, 0.2)};
  for (int k = 0; k < 100; ++k) {
    std::vector<ModeTrajectories> preds;
    for (int m = 0; m < 4; ++m) preds.push_back({line(u(gen), u(gen), 1, 0), line(u(gen), 5 + u(gen), 0.5, 0.2)});
    const auto d = displacement_metrics(preds, gt);
    EXPECT_LE(d.sfde_min, d.sfde_avg);
    EXPECT_LE(d.sade_min, d.sade_avg);
    EXPECT_GE(d.sfde_min, 0.0);
    EXPECT_GE(d.sade_min, 0.0);
  }
}

TEST(Displacement, MisalignedThrows)
{
  const ModeTrajectories gt{line(0, 0, 1, 0)};
  EXPECT_THROW(displacement_metrics({}, gt), AlignmentError);
  EXPECT_THROW(displacement_metrics({{line(0, 0, 1, 0), line(0, 0, 1, 0)}}, gt), AlignmentError);
  EXPECT_THROW(displacement_metrics({{line(0, 0, 1, 0, 10)}}, gt), AlignmentError);
}

TEST(Diversity, Examples)
{
  const ModeTrajectories a{line(0, 0, 1, 0)};
  const auto same = diversity_metrics({a, a, a});
  EXPECT_EQ(same.fdd, 0.0);
  EXPECT_EQ(same.sdd, 0.0);
  EXPECT_EQ(same.add, 0.0);

  const ModeTrajectories b{line(1, 0, 1, 0)};
  const auto d = diversity_metrics({a, b});
  EXPECT_DOUBLE_EQ(d.fdd, 1.0);
  EXPECT_DOUBLE_EQ(d.sdd, 1.0);
  EXPECT_DOUBLE_EQ(d.add, 1.0);

  // Final positions on an equilateral triangle of side 2.
  auto ending_at = [](double x, double y) {
    Trajectory t = line(0, 0, 0, 0);
    t.back() = {x, y, true};
    return ModeTrajectories{t};
  };
  const auto tri = diversity_metrics({ending_at(0, 0), ending_at(2, 0), ending_at(1, std::sqrt(3.0))});
  EXPECT_NEAR(tri.fdd, 2.0, 1e-12);
}

TEST(Diversity, TranslationInvariant)
{
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<ModeTrajectories> preds;
  for (int m = 0; m < 5; ++m) preds.push_back({line(u(gen), u(gen), u(gen), u(gen))});
  auto moved = preds;
  for (auto & mode : moved) {
    for (auto & p : mode[0]) {
      p.x += 123.0;
      p.y -= 45.0;
    }
  }
  const auto a = diversity_metrics(preds);
  const auto b = diversity_metrics(moved);
  EXPECT_NEAR(a.fdd, b.fdd, 1e-9);
  EXPECT_NEAR(a.sdd, b.sdd, 1e-9);
  EXPECT_NEAR(a.add, b.add, 1e-9);
}

TEST(Jsd, ClosedForms)
{
  EXPECT_EQ(jsd(Probs{0.2, 0.3, 0.5}, Probs{0.2, 0.3, 0.5}), 0.0);
  EXPECT_NEAR(jsd(Probs{1.0, 0.0}, Probs{0.0, 1.0}), 1.0, 1e-12);
  const double expected = 1.0 - 0.75 * std::log2(3.0) + 0.5;
  EXPECT_NEAR(jsd(Probs{0.5, 0.5}, Probs{1.0, 0.0}), expected, 1e-12);
  EXPECT_NEAR(jsd(Probs{0.5, 0.5}, Probs{1.0, 0.0}), 0.3113, 1e-4);
}

TEST(Jsd, PropertiesOnRandomHistograms)
{
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> p(8), q(8);
    double sp = 0, sq = 0;
    for (int i = 0; i < 8; ++i) {
      p[i] = u(gen) < 0.2 ? 0.0 : u(gen);
      q[i] = u(gen) < 0.2 ? 0.0 : u(gen);
      sp += p[i];
      sq += q[i];
    }
    if (sp == 0 || sq == 0) continue;
    for (int i = 0; i < 8; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double d = jsd(p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_NEAR(d, jsd(q, p), 1e-15);
    EXPECT_EQ(jsd(p, p), 0.0);
    if (p != q) EXPECT_GT(d, 0.0);
  }
}

TEST(Histogram, EdgesAndBinningChecks)
{
  Histogram h(0.0, 10.0, 10);
  h.add(-5.0);
  h.add(0.5);
  h.add(9.99);
  h.add(50.0);
  EXPECT_EQ(h.counts()[0], 2u);
  EXPECT_EQ(h.counts()[9], 2u);
  EXPECT_EQ(h.total(), 4u);
  Histogram other(0.0, 10.0, 20);
  EXPECT_THROW(jsd(h, other), BinningError);
  EXPECT_EQ(jsd(Histogram(0, 1, 3), Histogram(0, 1, 3)), 0.0);
}

TEST(Evaluate, PredEqualsGtGivesZeros)
{
  std::vector<ScenarioGroup> groups;
  for (const auto & s : scenario::synth_scenarios(3, 4)) groups.push_back({s, {s, s}});
  const auto r = evaluate(groups);
  EXPECT_EQ(r.sfde_avg, 0.0);
  EXPECT_EQ(r.sade_min, 0.0);
  EXPECT_EQ(r.jsd_velocity, 0.0);
  EXPECT_EQ(r.jsd_accel, 0.0);
  EXPECT_EQ(r.jsd_ttc, 0.0);
  EXPECT_EQ(r.fdd, 0.0);
  EXPECT_EQ(r.agent_coll_avg, 0.0);
  EXPECT_EQ(r.num_scenarios, 3);
  EXPECT_EQ(r.num_predictions, 6);
}

TEST(Evaluate, JobsDoNotChangeTheReport)
{
  std::vector<ScenarioGroup> groups;
  const auto data = scenario::synth_scenarios(4, 5);
  const auto other = scenario::synth_scenarios(4, 6);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto mode = other[i];
    mode.scenario_id = data[i].scenario_id;
    mode.agents.resize(data[i].agents.size(), data[i].agents[0]);
    for (std::size_t a = 0; a < mode.agents.size(); ++a) mode.agents[a].id = data[i].agents[a].id;
    groups.push_back({data[i], {mode, data[i]}});
  }
  EvalOptions one;
  EvalOptions many;
  many.jobs = 3;
  EXPECT_EQ(report_csv(evaluate(groups, one)), report_csv(evaluate(groups, many)));
}

TEST(Evaluate, MissingPairsThrow)
{
  const auto pred = test::temp_dir("eval_pred");
  const auto gt = test::temp_dir("eval_gt");
  const auto data = scenario::synth_scenarios(2, 3);
  scenario::save_scenario(data[0], gt / "a.json");
  scenario::save_scenario(data[1], gt / "b.json");
  scenario::save_scenario(data[0], pred / "a_mode0.json");
  EXPECT_THROW(load_groups(pred, gt), MissingPairError);
  scenario::save_scenario(data[1], pred / "b_mode0.json");
  EXPECT_NO_THROW(load_groups(pred, gt));
  auto stray = data[1];
  stray.scenario_id = "stray";
  scenario::save_scenario(stray, pred / "stray.json");
  EXPECT_THROW(load_groups(pred, gt), MissingPairError);
}

TEST(Evaluate, CsvHeader)
{
  const std::string csv = report_csv(EvalReport{});
  EXPECT_EQ(csv.rfind("# ", 0), 0u);
  EXPECT_NE(csv.find("attack_success"), std::string::npos);
  EXPECT_NE(csv.find("agents involved"), std::string::npos);
}

}  // namespace
}  // namespace revsim::metrics
