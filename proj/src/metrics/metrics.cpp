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

#include "revsim/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace revsim::metrics
{

bool CollisionReport::pair_collides(int i, int j) const { return first_collision_step(i, j) >= 0; }

int CollisionReport::first_collision_step(int i, int j) const
{
  const auto key = std::minmax(i, j);
  for (std::size_t t = 0; t < pairs_per_step.size(); ++t) {
    for (const auto & p : pairs_per_step[t]) {
      if (p.first == key.first && p.second == key.second) return static_cast<int>(t);
    }
  }
  return -1;
}

CollisionReport check_collisions(const scenario::Scenario & s)
{
  CollisionReport r;
  const int n = static_cast<int>(s.agents.size());
  r.pairs_per_step.resize(s.num_steps);
  r.involved.assign(n, false);
  for (int t = 0; t < s.num_steps; ++t) {
    for (int i = 0; i < n; ++i) {
      if (!s.agents[i].states[t].valid) continue;
      const OrientedBox bi = box_of(s.agents[i], t);
      for (int j = i + 1; j < n; ++j) {
        if (!s.agents[j].states[t].valid) continue;
        if (box_overlap(bi, box_of(s.agents[j], t))) {
          r.pairs_per_step[t].emplace_back(i, j);
          r.involved[i] = true;
          r.involved[j] = true;
        }
      }
    }
  }
  if (n > 0) {
    r.agent_collision_rate =
      static_cast<double>(std::count(r.involved.begin(), r.involved.end(), true)) / n;
  }
  return r;
}

std::optional<double> disc_ttc(double px, double py, double vx, double vy, double radius_sum)
{
  const double c = px * px + py * py - radius_sum * radius_sum;
  if (c <= 0.0) return 0.0;
  const double a = vx * vx + vy * vy;
  const double b = 2.0 * (px * vx + py * vy);
  if (a <= 0.0) return std::nullopt;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  // c > 0, so both roots share a sign; the smaller is the first contact.
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  if (t <= 0.0) return std::nullopt;
  return std::min(t, kTtcCap);
}

std::optional<double> ttc(const scenario::Scenario & s, int agent_i, int step)
{
  const auto & ai = s.agents.at(agent_i);
  const auto & si = ai.states.at(step);
  if (!si.valid) return std::nullopt;
  const double ri = 0.5 * std::hypot(ai.length, ai.width);
  std::optional<double> best;
  for (std::size_t j = 0; j < s.agents.size(); ++j) {
    if (static_cast<int>(j) == agent_i) continue;
    const auto & aj = s.agents[j];
    const auto & sj = aj.states[step];
    if (!sj.valid) continue;
    const double rj = 0.5 * std::hypot(aj.length, aj.width);
    const auto t = disc_ttc(sj.x - si.x, sj.y - si.y,
                            sj.speed * std::cos(sj.heading) - si.speed * std::cos(si.heading),
                            sj.speed * std::sin(sj.heading) - si.speed * std::sin(si.heading),
                            ri + rj);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

namespace
{

void check_alignment(const ModeTrajectories & mode, const ModeTrajectories & ref)
{
  if (mode.size() != ref.size()) {
    throw AlignmentError("agent count mismatch: " + std::to_string(mode.size()) + " vs " +
                         std::to_string(ref.size()));
  }
  for (std::size_t a = 0; a < mode.size(); ++a) {
    if (mode[a].size() != ref[a].size()) {
      throw AlignmentError("horizon mismatch for agent " + std::to_string(a));
    }
  }
}

}  // namespace

DisplacementMetrics displacement_metrics(const std::vector<ModeTrajectories> & preds,
                                         const ModeTrajectories & gt)
{
  if (preds.empty()) {
    throw AlignmentError("no prediction modes");
  }
  DisplacementMetrics out;
  for (const auto & mode : preds) {
    check_alignment(mode, gt);
    double fde_sum = 0.0;
    int fde_count = 0;
    double ade_sum = 0.0;
    int ade_count = 0;
    for (std::size_t a = 0; a < gt.size(); ++a) {
      int last = -1;
      for (std::size_t t = 0; t < gt[a].size(); ++t) {
        if (!gt[a][t].valid || !mode[a][t].valid) continue;
        ade_sum += std::hypot(mode[a][t].x - gt[a][t].x, mode[a][t].y - gt[a][t].y);
        ++ade_count;
        last = static_cast<int>(t);
      }
      if (last >= 0) {
        fde_sum += std::hypot(mode[a][last].x - gt[a][last].x, mode[a][last].y - gt[a][last].y);
        ++fde_count;
      }
    }
    out.sfde_per_mode.push_back(fde_count ? fde_sum / fde_count : 0.0);
    out.sade_per_mode.push_back(ade_count ? ade_sum / ade_count : 0.0);
  }
  const double m = static_cast<double>(preds.size());
  double fsum = 0.0;
  double asum = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    fsum += out.sfde_per_mode[k];
    asum += out.sade_per_mode[k];
  }
  out.sfde_avg = fsum / m;
  out.sade_avg = asum / m;
  out.sfde_min = *std::min_element(out.sfde_per_mode.begin(), out.sfde_per_mode.end());
  out.sade_min = *std::min_element(out.sade_per_mode.begin(), out.sade_per_mode.end());
  return out;
}

namespace
{

/// Mean pairwise distance among valid mode positions; nullopt if fewer than
/// two modes are valid.
std::optional<double> spread(const std::vector<ModeTrajectories> & preds, std::size_t agent,
                             std::size_t step)
{
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Point & p = preds[i][agent][step];
    if (!p.valid) continue;
    for (std::size_t j = i + 1; j < preds.size(); ++j) {
      const Point & q = preds[j][agent][step];
      if (!q.valid) continue;
      sum += std::hypot(p.x - q.x, p.y - q.y);
      ++pairs;
    }
  }
  if (pairs == 0) return std::nullopt;
  return sum / pairs;
}

}  // namespace

DiversityMetrics diversity_metrics(const std::vector<ModeTrajectories> & preds)
{
  DiversityMetrics out;
  if (preds.size() < 2) return out;
  for (const auto & mode : preds) check_alignment(mode, preds.front());
  const std::size_t agents = preds.front().size();
  double fdd = 0.0;
  double sdd = 0.0;
  double add = 0.0;
  int counted = 0;
  for (std::size_t a = 0; a < agents; ++a) {
    const std::size_t steps = preds.front()[a].size();
    if (steps == 0) continue;
    double step_sum = 0.0;
    int step_count = 0;
    std::optional<double> first;
    std::optional<double> last;
    for (std::size_t t = 0; t < steps; ++t) {
      const auto sp = spread(preds, a, t);
      if (!sp) continue;
      if (!first) first = sp;
      last = sp;
      step_sum += *sp;
      ++step_count;
    }
    if (step_count == 0) continue;
    sdd += *first;
    fdd += *last;
    add += step_sum / step_count;
    ++counted;
  }
  if (counted > 0) {
    out.fdd = fdd / counted;
    out.sdd = sdd / counted;
    out.add = add / counted;
  }
  return out;
}

Trajectory positions_of(const scenario::AgentTrack & t)
{
  Trajectory out;
  out.reserve(t.states.size());
  for (const auto & s : t.states) out.push_back({s.x, s.y, s.valid});
  return out;
}

}  // namespace revsim::metrics
