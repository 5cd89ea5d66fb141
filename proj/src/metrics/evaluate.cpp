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

#include "revsim/metrics/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "revsim/common/errors.hpp"
#include "revsim/scenario/io.hpp"

namespace revsim::metrics
{

namespace
{

using scenario::AgentTrack;
using scenario::Scenario;

Histogram make(const HistogramBins & b) { return Histogram(b.lo, b.hi, b.num_bins); }

struct Distributions
{
  Histogram velocity;
  Histogram accel;
  Histogram ttc;

  explicit Distributions(const EvalBins & b) : velocity(make(b.velocity)), accel(make(b.accel)), ttc(make(b.ttc)) {}

  void add(const Scenario & s)
  {
    for (int i = 0; i < static_cast<int>(s.agents.size()); ++i) {
      const auto & st = s.agents[i].states;
      for (int t = 0; t < static_cast<int>(st.size()); ++t) {
        if (!st[t].valid) continue;
        velocity.add(std::abs(st[t].speed));
        if (t > 0 && st[t - 1].valid) accel.add((st[t].speed - st[t - 1].speed) / s.dt);
        if (const auto v = metrics::ttc(s, i, t)) this->ttc.add(*v);
      }
    }
  }

  void merge(const Distributions & o)
  {
    velocity.merge(o.velocity);
    accel.merge(o.accel);
    ttc.merge(o.ttc);
  }
};

const AgentTrack * find_agent(const Scenario & s, const std::string & id)
{
  for (const auto & a : s.agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

/// Index of the single agent missing from `gt`, or -1.
int adversary_index(const Scenario & pred, const Scenario & gt)
{
  int found = -1;
  for (int i = 0; i < static_cast<int>(pred.agents.size()); ++i) {
    if (!find_agent(gt, pred.agents[i].id)) {
      if (found >= 0) throw AlignmentError("scenario " + pred.scenario_id + " has several agents not in the recorded log");
      found = i;
    }
  }
  return found;
}

bool overlaps_ever(const AgentTrack & a, const AgentTrack & b)
{
  const std::size_t n = std::min(a.states.size(), b.states.size());
  for (std::size_t t = 0; t < n; ++t) {
    if (!a.states[t].valid || !b.states[t].valid) continue;
    if (box_overlap(box_of(a, static_cast<int>(t)), box_of(b, static_cast<int>(t)))) return true;
  }
  return false;
}

struct GroupResult
{
  DisplacementMetrics disp;
  DiversityMetrics div;
  int attacks = 0;
  int adv_traffic = 0;
  double coll_avg = 0.0;
  double coll_min = 0.0;
  Distributions pred;
  Distributions gt;

  explicit GroupResult(const EvalBins & b) : pred(b), gt(b) {}
};

GroupResult evaluate_group(const ScenarioGroup & g, const EvalBins & bins)
{
  GroupResult out(bins);
  if (g.modes.empty()) throw MissingPairError("scenario " + g.gt.scenario_id + " has no predictions");
  out.gt.add(g.gt);

  ModeTrajectories gt_traj;
  for (const auto & a : g.gt.agents) gt_traj.push_back(positions_of(a));

  std::vector<ModeTrajectories> pred_traj;
  std::vector<ModeTrajectories> adv_traj;
  bool all_have_adv = true;
  double coll_sum = 0.0;
  double coll_min = std::numeric_limits<double>::infinity();
  for (const Scenario & m : g.modes) {
    out.pred.add(m);
    ModeTrajectories mt;
    for (const auto & a : g.gt.agents) {
      const AgentTrack * p = find_agent(m, a.id);
      if (!p) throw AlignmentError("agent " + a.id + " missing from a prediction of " + g.gt.scenario_id);
      mt.push_back(positions_of(*p));
    }
    pred_traj.push_back(std::move(mt));

    const int adv = adversary_index(m, g.gt);
    const int ego = m.ego_index();
    Scenario traffic = m;
    if (adv >= 0) {
      adv_traj.push_back({positions_of(m.agents[adv])});
      if (ego >= 0 && overlaps_ever(m.agents[adv], m.agents[ego])) ++out.attacks;
      for (int i = 0; i < static_cast<int>(m.agents.size()); ++i) {
        if (i == adv || i == ego) continue;
        if (overlaps_ever(m.agents[adv], m.agents[i])) {
          ++out.adv_traffic;
          break;
        }
      }
      traffic.agents.erase(traffic.agents.begin() + adv);
    } else {
      all_have_adv = false;
    }
    const double rate = check_collisions(traffic).agent_collision_rate;
    coll_sum += rate;
    coll_min = std::min(coll_min, rate);
  }
  out.coll_avg = coll_sum / static_cast<double>(g.modes.size());
  out.coll_min = coll_min;
  out.disp = displacement_metrics(pred_traj, gt_traj);
  out.div = diversity_metrics(all_have_adv ? adv_traj : pred_traj);
  return out;
}

}  // namespace

EvalReport evaluate(const std::vector<ScenarioGroup> & groups, const EvalOptions & opt)
{
  if (groups.empty()) throw MissingPairError("no scenario pairs to evaluate");
  std::vector<std::optional<GroupResult>> results(groups.size());
  std::vector<std::string> errors(groups.size());
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(groups.size())));
  auto work = [&](int worker) {
    for (std::size_t i = static_cast<std::size_t>(worker); i < groups.size(); i += static_cast<std::size_t>(jobs)) {
      try {
        results[i] = evaluate_group(groups[i], opt.bins);
      } catch (const std::exception & e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto & t : pool) t.join();
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!results[i]) throw AlignmentError(errors[i]);
  }

  // Reduction in a fixed order.
  EvalReport r;
  Distributions pred(opt.bins);
  Distributions gt(opt.bins);
  int predictions = 0;
  int attacks = 0;
  int adv_traffic = 0;
  for (const auto & res : results) {
    r.sfde_avg += res->disp.sfde_avg;
    r.sfde_min += res->disp.sfde_min;
    r.sade_avg += res->disp.sade_avg;
    r.sade_min += res->disp.sade_min;
    r.fdd += res->div.fdd;
    r.sdd += res->div.sdd;
    r.add += res->div.add;
    r.agent_coll_avg += res->coll_avg;
    r.agent_coll_min += res->coll_min;
    attacks += res->attacks;
    adv_traffic += res->adv_traffic;
    pred.merge(res->pred);
    gt.merge(res->gt);
  }
  for (const auto & g : groups) predictions += static_cast<int>(g.modes.size());
  const double n = static_cast<double>(groups.size());
  for (double * v : {&r.sfde_avg, &r.sfde_min, &r.sade_avg, &r.sade_min, &r.fdd, &r.sdd, &r.add,
                     &r.agent_coll_avg, &r.agent_coll_min}) {
    *v /= n;
  }
  r.attack_success = static_cast<double>(attacks) / predictions;
  r.adv_traffic_coll = static_cast<double>(adv_traffic) / predictions;
  r.jsd_velocity = jsd(pred.velocity, gt.velocity);
  r.jsd_accel = jsd(pred.accel, gt.accel);
  r.jsd_ttc = jsd(pred.ttc, gt.ttc);
  r.num_scenarios = static_cast<int>(groups.size());
  r.num_predictions = predictions;
  r.seed = opt.seed;
  return r;
}

std::vector<std::filesystem::path> scenario_files(const std::filesystem::path & dir)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto & e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (e.path().extension() != ".json" || name == "manifest.json" || name == "run_config.json") continue;
    if (name.size() > 13 && name.compare(name.size() - 13, 13, ".sidecar.json") == 0) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<ScenarioGroup> load_groups(const std::filesystem::path & pred_dir,
                                       const std::filesystem::path & gt_dir)
{
  std::map<std::string, ScenarioGroup> by_id;
  for (const auto & f : scenario_files(gt_dir)) {
    Scenario s = scenario::load_scenario(f);
    const std::string id = s.scenario_id;
    if (by_id.count(id)) throw AlignmentError("duplicate recorded scenario id " + id);
    by_id[id].gt = std::move(s);
  }
  std::set<std::string> pred_ids;
  for (const auto & f : scenario_files(pred_dir)) {
    Scenario s = scenario::load_scenario(f);
    auto it = by_id.find(s.scenario_id);
    if (it == by_id.end()) {
      throw MissingPairError("prediction " + f.filename().string() + " (scenario " + s.scenario_id +
                             ") has no recorded counterpart");
    }
    pred_ids.insert(s.scenario_id);
    it->second.modes.push_back(std::move(s));
  }
  if (pred_ids.empty()) throw MissingPairError("no prediction matches a recorded scenario");
  std::vector<ScenarioGroup> out;
  for (auto & [id, g] : by_id) {
    if (!pred_ids.count(id)) throw MissingPairError("recorded scenario " + id + " has no prediction");
    out.push_back(std::move(g));
  }
  return out;
}

EvalReport evaluate(const std::filesystem::path & pred_dir, const std::filesystem::path & gt_dir,
                    const EvalOptions & opt)
{
  return evaluate(load_groups(pred_dir, gt_dir), opt);
}

std::string report_csv(const EvalReport & r)
{
  std::ostringstream out;
  out << "# agent collision rates count agents involved in at least one overlap (adversary excluded)\n";
  out << "fdd,add,jsd_velocity,jsd_accel,jsd_ttc,attack_success,agent_coll_min,adv_traffic_coll,"
         "sfde_avg,sfde_min,sade_avg,sade_min,sdd,agent_coll_avg,num_scenarios,num_predictions,seed\n";
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,%llu\n",
                r.fdd, r.add, r.jsd_velocity, r.jsd_accel, r.jsd_ttc, r.attack_success,
                r.agent_coll_min, r.adv_traffic_coll, r.sfde_avg, r.sfde_min, r.sade_avg,
                r.sade_min, r.sdd, r.agent_coll_avg, r.num_scenarios, r.num_predictions,
                static_cast<unsigned long long>(r.seed));
  out << buf;
  return out.str();
}

}  // namespace revsim::metrics
