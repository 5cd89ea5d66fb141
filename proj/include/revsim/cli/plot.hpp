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

#include <string>

#include "revsim/scenario/types.hpp"

namespace revsim::cli
{

struct PlotOptions
{
  int stride = 3;               // draw every stride-th step (plus the last)
  std::string adv_id = "adv";
  double pixels_per_meter = 4.0;
};

/// Bird's-eye SVG: map polylines styled by kind, agent boxes at sampled
/// steps with opacity growing over time; ego red, adversary orange, other
/// agents blue. Output bytes depend only on the inputs.
std::string render_svg(const scenario::Scenario & s, const PlotOptions & opt = {});

}  // namespace revsim::cli
