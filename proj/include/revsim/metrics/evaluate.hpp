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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "revsim/metrics/histogram.hpp"
#include "revsim/metrics/metrics.hpp"
#include "revsim/scenario/types.hpp"

namespace revsim::metrics
{

struct HistogramBins
{
  double lo = 0.0;
  double hi = 1.0;
  int num_bins = 1;
};

struct EvalBins
{
  HistogramBins velocity{0.0, 30.0, 30};   // m/s
  HistogramBins accel{-10.0, 10.0, 40};    // m/s^2
  HistogramBins ttc{0.0, kTtcCap, 20};     // s
};

struct EvalReport
{
  double sfde_avg = 0.0;
  double sfde_min = 0.0;
  double sade_avg = 0.0;
  double sade_min = 0.0;
  double fdd = 0.0;
  double sdd = 0.0;
  double add = 0.0;
  double jsd_velocity = 0.0;
  double jsd_accel = 0.0;
  double jsd_ttc = 0.0;
  double attack_success = 0.0;
  double adv_traffic_coll = 0.0;
  double agent_coll_avg = 0.0;
  double agent_coll_min = 0.0;
  int num_scenarios = 0;
  int num_predictions = 0;
  std::uint64_t seed = 0;
};

/// Prediction modes of one scenario against its recorded counterpart.
struct ScenarioGroup
{
  scenario::Scenario gt;
  std::vector<scenario::Scenario> modes;
};

struct EvalOptions
{
  EvalBins bins;
  int jobs = 1;
  std::uint64_t seed = 0;  // echoed into the report
};

/// Corpus metrics. Agents are matched by id; a predicted agent absent from
/// the recorded scenario is the adversary. Displacement errors cover the
/// recorded agents; diversity covers the adversary when present (all
/// matched agents otherwise); agent collision rates exclude the adversary
/// and count agents involved, not pairs.
EvalReport evaluate(const std::vector<ScenarioGroup> & groups, const EvalOptions & opt = {});

/// Loads every scenario file (*.json except manifest.json and sidecars) of
/// both directories and groups predictions by scenario_id. Throws
/// MissingPairError unless both sides hold the same set of ids.
std::vector<ScenarioGroup> load_groups(const std::filesystem::path & pred_dir,
                                       const std::filesystem::path & gt_dir);

EvalReport evaluate(const std::filesystem::path & pred_dir, const std::filesystem::path & gt_dir,
                    const EvalOptions & opt = {});

/// Scenario files of a directory in name order.
std::vector<std::filesystem::path> scenario_files(const std::filesystem::path & dir);

/// Header comment, column header and one data row.
std::string report_csv(const EvalReport & r);

}  // namespace revsim::metrics
